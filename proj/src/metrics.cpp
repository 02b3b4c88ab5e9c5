#include "biam/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <queue>
#include <random>

#include "biam/error.hpp"

namespace biam {

Point GridGraph::node_center(std::int32_t node) const {
  const auto [cx, cy] = cell_of_node[static_cast<std::size_t>(node)];
  return {(cx + 0.5) * resolution, (cy + 0.5) * resolution};
}

std::optional<std::int32_t> GridGraph::cell_of(Point p) const {
  if (!(p.x >= 0.0) || !(p.y >= 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
  const int cx = std::min(static_cast<int>(p.x / resolution), cols - 1);
  const int cy = std::min(static_cast<int>(p.y / resolution), rows - 1);
  if (cx < 0 || cy < 0) return std::nullopt;
  const auto direct = node_of_cell[static_cast<std::size_t>(cy) * cols + cx];
  if (direct >= 0) return direct;

  std::optional<std::int32_t> best;
  double best_d = kInfinity;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int nx = cx + dx, ny = cy + dy;
      if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
      const auto node = node_of_cell[static_cast<std::size_t>(ny) * cols + nx];
      if (node < 0) continue;
      const double d = squared_distance(p, node_center(node));
      if (d < best_d || (d == best_d && best && node < *best)) {
        best_d = d;
        best = node;
      }
    }
  }
  return best;
}

std::vector<std::int32_t> GridGraph::components() const {
  std::vector<std::int32_t> label(node_count(), -1);
  std::int32_t next = 0;
  std::vector<std::int32_t> stack;
  for (std::size_t s = 0; s < node_count(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.assign(1, static_cast<std::int32_t>(s));
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto e = offsets[u]; e < offsets[u + 1]; ++e) {
        const auto v = targets[static_cast<std::size_t>(e)];
        if (label[v] < 0) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

GridGraph build_grid_graph(const WorldMap& map, double resolution) {
  const double ratio = resolution / map.cell_size();
  const long factor = std::lround(ratio);
  if (!(resolution > 0.0) || factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
    throw MetricError("metric resolution must be a positive integer multiple of the cell size");
  }
  const int f = static_cast<int>(factor);
  GridGraph g;
  g.resolution = resolution;
  g.cols = (map.cols() + f - 1) / f;
  g.rows = (map.rows() + f - 1) / f;
  g.source_revision = map.static_revision();
  g.node_of_cell.assign(static_cast<std::size_t>(g.cols) * g.rows, -1);

  for (int cy = 0; cy < g.rows; ++cy) {
    for (int cx = 0; cx < g.cols; ++cx) {
      bool free = true;
      for (int fy = cy * f; free && fy < std::min((cy + 1) * f, map.rows()); ++fy) {
        for (int fx = cx * f; fx < std::min((cx + 1) * f, map.cols()); ++fx) {
          if (map.cell_occupied(fx, fy)) {
            free = false;
            break;
          }
        }
      }
      if (free) {
        g.node_of_cell[static_cast<std::size_t>(cy) * g.cols + cx] = static_cast<std::int32_t>(g.cell_of_node.size());
        g.cell_of_node.push_back({cx, cy});
      }
    }
  }

  auto node_at = [&g](int x, int y) -> std::int32_t {
    if (x < 0 || y < 0 || x >= g.cols || y >= g.rows) return -1;
    return g.node_of_cell[static_cast<std::size_t>(y) * g.cols + x];
  };
  static constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

  g.offsets.reserve(g.node_count() + 1);
  g.offsets.push_back(0);
  for (const auto& [cx, cy] : g.cell_of_node) {
    for (int d = 0; d < 8; ++d) {
      const auto v = node_at(cx + kDx[d], cy + kDy[d]);
      if (v < 0) continue;
      const bool diag = kDx[d] != 0 && kDy[d] != 0;
      if (diag && (node_at(cx + kDx[d], cy) < 0 || node_at(cx, cy + kDy[d]) < 0)) continue;
      g.targets.push_back(v);
      g.diagonal.push_back(diag ? 1 : 0);
    }
    g.offsets.push_back(static_cast<std::int32_t>(g.targets.size()));
  }
  return g;
}

double default_metric_resolution(const WorldMap& map, std::size_t max_cells) {
  for (int f = 1;; ++f) {
    const std::size_t c = static_cast<std::size_t>((map.cols() + f - 1) / f);
    const std::size_t r = static_cast<std::size_t>((map.rows() + f - 1) / f);
    if (c * r <= max_cells || (c == 1 && r == 1)) return f * map.cell_size();
  }
}

namespace {

// y = D^-1/2 W D^-1/2 x restricted to one component (local indices).
struct NormalizedAdjacency {
  std::vector<std::int32_t> offsets;
  std::vector<std::int32_t> targets;
  std::vector<double> inv_sqrt_deg;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double acc = 0.0;
      for (auto e = offsets[i]; e < offsets[i + 1]; ++e) {
        const auto j = targets[static_cast<std::size_t>(e)];
        acc += x[j] * inv_sqrt_deg[j];
      }
      y[i] = acc * inv_sqrt_deg[i];
    }
    return y;
  }
};

}  // namespace

DiffusionEmbedding build_diffusion_embedding(const GridGraph& graph, const DiffusionOptions& options) {
  if (options.k < 2) throw MetricError("diffusion embedding needs at least two components");
  if (options.t < 1) throw MetricError("diffusion time must be a positive integer");
  const auto n = graph.node_count();
  if (n == 0) throw MetricError("grid graph has no nodes");

  const auto label = graph.components();
  const auto n_labels = static_cast<std::size_t>(*std::max_element(label.begin(), label.end()) + 1);
  std::vector<std::size_t> sizes(n_labels, 0);
  for (auto l : label) ++sizes[static_cast<std::size_t>(l)];
  const auto main = static_cast<std::int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  std::vector<std::int32_t> local(n, -1);
  std::vector<std::int32_t> global;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == main) {
      local[i] = static_cast<std::int32_t>(global.size());
      global.push_back(static_cast<std::int32_t>(i));
    }
  }
  const auto m = static_cast<Eigen::Index>(global.size());
  const int k = options.k;
  if (k >= m) {
    throw MetricError("component count k=" + std::to_string(k) + " must be below the node count " + std::to_string(m));
  }

  NormalizedAdjacency op;
  op.offsets.push_back(0);
  Eigen::VectorXd sqrt_deg(m);
  for (Eigen::Index li = 0; li < m; ++li) {
    const auto gi = global[static_cast<std::size_t>(li)];
    for (auto e = graph.offsets[gi]; e < graph.offsets[gi + 1]; ++e) {
      op.targets.push_back(local[graph.targets[static_cast<std::size_t>(e)]]);
    }
    op.offsets.push_back(static_cast<std::int32_t>(op.targets.size()));
    const double deg = static_cast<double>(graph.offsets[gi + 1] - graph.offsets[gi]);
    if (deg == 0.0) throw MetricError("isolated node in the main component");
    sqrt_deg[li] = std::sqrt(deg);
    op.inv_sqrt_deg.push_back(1.0 / sqrt_deg[li]);
  }
  const Eigen::VectorXd trivial = sqrt_deg.normalized();
  const double volume = sqrt_deg.squaredNorm();

  // Block Krylov iteration with full reorthogonalisation against the trivial
  // eigenvector and the whole basis, followed by Rayleigh-Ritz.
  std::vector<Eigen::VectorXd> basis, images;
  Eigen::MatrixXd projected;
  Rng rng(options.seed);
  std::normal_distribution<double> normal;
  auto random_block = [&] {
    std::vector<Eigen::VectorXd> block(static_cast<std::size_t>(options.block_size));
    for (auto& v : block) {
      v.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) v[i] = normal(rng);
    }
    return block;
  };

  const Eigen::Index max_dim = m - 1;
  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;  // m x k
  std::size_t last_check = 0;
  bool converged = false;
  auto block = random_block();

  for (int iteration = 0; !converged; ++iteration) {
    if (iteration >= options.max_iterations) throw MetricError("diffusion eigen-solver did not converge");
    std::vector<Eigen::VectorXd> fresh;
    for (auto& v : block) {
      const double start_norm = v.norm();
      if (start_norm == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        v -= trivial * trivial.dot(v);
        for (const auto& b : basis) v -= b * b.dot(v);
        for (const auto& b : fresh) v -= b * b.dot(v);
      }
      const double norm = v.norm();
      if (norm > 1e-8 * start_norm && static_cast<Eigen::Index>(basis.size() + fresh.size()) < max_dim) {
        fresh.push_back(v / norm);
      }
    }
    if (fresh.empty()) {
      if (static_cast<Eigen::Index>(basis.size()) < max_dim) {
        block = random_block();
        continue;
      }
    }

    const std::size_t old = basis.size();
    const std::size_t dim = old + fresh.size();
    Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    if (old > 0) grown.topLeftCorner(projected.rows(), projected.cols()) = projected;
    for (auto& v : fresh) {
      basis.push_back(std::move(v));
      images.push_back(op.apply(basis.back()));
    }
    for (std::size_t j = old; j < dim; ++j) {
      for (std::size_t i = 0; i <= j; ++i) {
        const double h = basis[i].dot(images[j]);
        grown(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h;
        grown(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = h;
      }
    }
    projected = std::move(grown);

    const bool exhausted = static_cast<Eigen::Index>(dim) >= max_dim;
    const bool due = dim >= static_cast<std::size_t>(2 * k) &&
                     dim - last_check >= std::max<std::size_t>(static_cast<std::size_t>(options.block_size), dim / 8);
    if (due || exhausted) {
      last_check = dim;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(projected);
      const auto d = static_cast<Eigen::Index>(dim);
      ritz_values.resize(k);
      ritz_vectors.resize(m, k);
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        const Eigen::Index col = d - 1 - i;
        const Eigen::VectorXd c = solver.eigenvectors().col(col);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd ay = Eigen::VectorXd::Zero(m);
        for (std::size_t j = 0; j < dim; ++j) {
          y += basis[j] * c[static_cast<Eigen::Index>(j)];
          ay += images[j] * c[static_cast<Eigen::Index>(j)];
        }
        const double ny = y.norm();
        const double theta = solver.eigenvalues()[col];
        worst = std::max(worst, (ay - theta * y).norm() / ny);
        ritz_values[i] = theta;
        ritz_vectors.col(i) = y / ny;
      }
      converged = worst <= options.tolerance || exhausted;
    }
    if (!converged) {
      block.assign(images.end() - static_cast<std::ptrdiff_t>(dim - old), images.end());
    }
  }

  DiffusionEmbedding emb;
  emb.k = k;
  emb.t = options.t;
  emb.source_revision = graph.source_revision;
  emb.eigenvalues.assign(ritz_values.data(), ritz_values.data() + k);
  emb.coords.assign(n * static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd phi = ritz_vectors.col(i);
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < m; ++r) {
      if (std::abs(phi[r]) > std::abs(phi[arg])) arg = r;
    }
    if (phi[arg] < 0.0) phi = -phi;
    const double scale = std::pow(ritz_values[i], options.t) * std::sqrt(volume);
    for (Eigen::Index r = 0; r < m; ++r) {
      emb.coords[static_cast<std::size_t>(global[static_cast<std::size_t>(r)]) * k + i] = scale * phi[r] / sqrt_deg[r];
    }
  }
  // Park every other component at its own far point.
  for (std::size_t node = 0; node < n; ++node) {
    if (label[node] == main) continue;
    emb.coords[node * static_cast<std::size_t>(k)] = 1e6 * (1.0 + label[node]);
  }
  return emb;
}

double diffusion_distance(const DiffusionEmbedding& emb, const GridGraph& graph, Point a, Point b) {
  const auto na = graph.cell_of(a);
  const auto nb = graph.cell_of(b);
  if (!na || !nb) throw MetricError("point has no free grid cell within one resolution step");
  if (*na == *nb) return 0.0;
  const auto ca = emb.coord(*na);
  const auto cb = emb.coord(*nb);
  double acc = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const double d = ca[i] - cb[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

GeodesicTable build_geodesic_table(const GridGraph& graph) {
  const std::size_t n = graph.node_count();
  GeodesicTable table;
  table.n = n;
  table.source_revision = graph.source_revision;
  table.dist.assign(n * n, kInfinity);

  // Path lengths are straight*res + diagonal*res*sqrt2; tracking the two step
  // counts keeps every entry independent of summation order.
  std::vector<std::int32_t> straight(n), diag(n);
  std::vector<double> key(n);
  using Item = std::pair<double, std::int32_t>;
  std::vector<Item> heap_storage;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(key.begin(), key.end(), kInfinity);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap(std::greater<>{}, std::move(heap_storage));
    key[s] = 0.0;
    straight[s] = 0;
    diag[s] = 0;
    heap.emplace(0.0, static_cast<std::int32_t>(s));
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > key[u]) continue;
      for (auto e = graph.offsets[u]; e < graph.offsets[u + 1]; ++e) {
        const auto v = graph.targets[static_cast<std::size_t>(e)];
        const bool is_diag = graph.diagonal[static_cast<std::size_t>(e)] != 0;
        const std::int32_t a = straight[u] + (is_diag ? 0 : 1);
        const std::int32_t b = diag[u] + (is_diag ? 1 : 0);
        const double cand = a + b * std::numbers::sqrt2;
        if (cand < key[v]) {
          key[v] = cand;
          straight[v] = a;
          diag[v] = b;
          heap.emplace(cand, v);
        }
      }
    }
    double* row = table.dist.data() + s * n;
    for (std::size_t v = 0; v < n; ++v) {
      if (key[v] < kInfinity) row[v] = graph.resolution * (straight[v] + diag[v] * std::numbers::sqrt2);
    }
    heap_storage.clear();
  }
  return table;
}

double geodesic_distance(const GeodesicTable& table, const GridGraph& graph, Point a, Point b) {
  const auto na = graph.cell_of(a);
  const auto nb = graph.cell_of(b);
  if (!na || !nb) throw MetricError("point has no free grid cell within one resolution step");
  return table.at(static_cast<std::size_t>(*na), static_cast<std::size_t>(*nb));
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean:
      return "euclidean";
    case MetricKind::diffusion:
      return "diffusion";
    case MetricKind::geodesic:
      return "geodesic";
  }
  return "?";
}

MetricKind metric_kind_from_string(std::string_view text) {
  if (text == "euclidean") return MetricKind::euclidean;
  if (text == "diffusion") return MetricKind::diffusion;
  if (text == "geodesic") return MetricKind::geodesic;
  throw ConfigError("unknown metric '" + std::string(text) + "'");
}

AssistingMetric AssistingMetric::euclidean_metric() { return {}; }

AssistingMetric AssistingMetric::diffusion(std::shared_ptr<const GridGraph> graph,
                                           std::shared_ptr<const DiffusionEmbedding> embedding) {
  if (!graph || !embedding) throw MetricError("diffusion metric needs a graph and an embedding");
  AssistingMetric m;
  m.kind_ = MetricKind::diffusion;
  m.graph_ = std::move(graph);
  m.embedding_ = std::move(embedding);
  return m;
}

AssistingMetric AssistingMetric::geodesic(std::shared_ptr<const GridGraph> graph,
                                          std::shared_ptr<const GeodesicTable> table) {
  if (!graph || !table) throw MetricError("geodesic metric needs a graph and a table");
  AssistingMetric m;
  m.kind_ = MetricKind::geodesic;
  m.graph_ = std::move(graph);
  m.table_ = std::move(table);
  return m;
}

double AssistingMetric::distance(Point a, Point b) const {
  switch (kind_) {
    case MetricKind::euclidean:
      return euclidean(a, b);
    case MetricKind::diffusion: {
      const auto na = graph_->cell_of(a);
      const auto nb = graph_->cell_of(b);
      if (!na || !nb) return kInfinity;
      if (*na == *nb) return 0.0;
      const auto ca = embedding_->coord(*na);
      const auto cb = embedding_->coord(*nb);
      double acc = 0.0;
      for (std::size_t i = 0; i < ca.size(); ++i) {
        const double d = ca[i] - cb[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case MetricKind::geodesic: {
      const auto na = graph_->cell_of(a);
      const auto nb = graph_->cell_of(b);
      if (!na || !nb) return kInfinity;
      return table_->at(static_cast<std::size_t>(*na), static_cast<std::size_t>(*nb));
    }
  }
  return kInfinity;
}

bool AssistingMetric::stale(const WorldMap& map) const noexcept {
  return graph_ && graph_->source_revision != map.static_revision();
}

// ---------------------------------------------------------------------------
// Cache sidecars

namespace {

constexpr char kMagic[8] = {'B', 'I', 'A', 'M', 'M', 'E', 'T', 'R'};
constexpr std::uint32_t kCacheVersion = 1;

template <class T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw MetricError("truncated metric cache file");
  return value;
}

void write_header(std::ofstream& out, const MetricCacheKey& key) {
  out.write(kMagic, sizeof kMagic);
  put(out, kCacheVersion);
  put(out, static_cast<std::uint8_t>(key.kind));
  put(out, key.map_hash);
  put(out, key.resolution);
  put(out, static_cast<std::int32_t>(key.k));
  put(out, static_cast<std::int32_t>(key.t));
}

void check_header(std::ifstream& in, const MetricCacheKey& expected) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw MetricError("not a metric cache file");
  if (get<std::uint32_t>(in) != kCacheVersion) throw MetricError("unsupported metric cache version");
  MetricCacheKey key;
  key.kind = static_cast<MetricKind>(get<std::uint8_t>(in));
  key.map_hash = get<std::uint64_t>(in);
  key.resolution = get<double>(in);
  key.k = get<std::int32_t>(in);
  key.t = get<std::int32_t>(in);
  if (key.map_hash != expected.map_hash) throw MetricError("metric cache was built for a different map");
  if (!(key == expected)) throw MetricError("metric cache parameters do not match");
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MetricError("cannot write metric cache " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricError("cannot read metric cache " + path.string());
  return in;
}

template <class T>
void put_vector(std::ofstream& out, const std::vector<T>& v) {
  put(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
std::vector<T> get_vector(std::ifstream& in) {
  const auto size = get<std::uint64_t>(in);
  std::vector<T> v(size);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size * sizeof(T)));
  if (!in) throw MetricError("truncated metric cache file");
  return v;
}

}  // namespace

std::filesystem::path cache_file_name(const MetricCacheKey& key) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%016llx-%s-r%g-k%d-t%d.bin", static_cast<unsigned long long>(key.map_hash),
                std::string(to_string(key.kind)).c_str(), key.resolution, key.k, key.t);
  return buf;
}

void save_embedding(const std::filesystem::path& path, const MetricCacheKey& key, const DiffusionEmbedding& emb) {
  auto out = open_out(path);
  write_header(out, key);
  put(out, static_cast<std::int32_t>(emb.k));
  put(out, static_cast<std::int32_t>(emb.t));
  put_vector(out, emb.eigenvalues);
  put_vector(out, emb.coords);
  if (!out) throw MetricError("failed writing metric cache " + path.string());
}

DiffusionEmbedding load_embedding(const std::filesystem::path& path, const MetricCacheKey& expected) {
  auto in = open_in(path);
  check_header(in, expected);
  DiffusionEmbedding emb;
  emb.k = get<std::int32_t>(in);
  emb.t = get<std::int32_t>(in);
  emb.eigenvalues = get_vector<double>(in);
  emb.coords = get_vector<double>(in);
  if (emb.k <= 0 || emb.coords.size() % static_cast<std::size_t>(emb.k) != 0) {
    throw MetricError("corrupt embedding cache");
  }
  return emb;
}

void save_geodesic(const std::filesystem::path& path, const MetricCacheKey& key, const GeodesicTable& table) {
  auto out = open_out(path);
  write_header(out, key);
  put(out, static_cast<std::uint64_t>(table.n));
  put_vector(out, table.dist);
  if (!out) throw MetricError("failed writing metric cache " + path.string());
}

GeodesicTable load_geodesic(const std::filesystem::path& path, const MetricCacheKey& expected) {
  auto in = open_in(path);
  check_header(in, expected);
  GeodesicTable table;
  table.n = get<std::uint64_t>(in);
  table.dist = get_vector<double>(in);
  if (table.dist.size() != table.n * table.n) throw MetricError("corrupt geodesic cache");
  return table;
}

PreparedMetric prepare_metric(const WorldMap& map, MetricKind kind, const MetricParams& params,
                              const CacheOptions& cache) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedMetric out;
  if (kind == MetricKind::euclidean) {
    out.metric = AssistingMetric::euclidean_metric();
    return out;
  }
  const double resolution = params.resolution > 0.0 ? params.resolution : default_metric_resolution(map);
  auto graph = std::make_shared<GridGraph>(build_grid_graph(map, resolution));

  MetricCacheKey key{kind, map.content_hash(), resolution, kind == MetricKind::diffusion ? params.k : 0,
                     kind == MetricKind::diffusion ? params.t : 0};
  std::optional<std::filesystem::path> file;
  if (cache.directory) file = *cache.directory / cache_file_name(key);
  const bool use_file = file && !cache.rebuild && std::filesystem::exists(*file);
  if (!use_file && !cache.allow_build) {
    throw MetricError("metric cache missing and rebuilding is disabled");
  }

  if (kind == MetricKind::diffusion) {
    DiffusionEmbedding emb;
    if (use_file) {
      emb = load_embedding(*file, key);
    } else {
      DiffusionOptions opts;
      opts.k = params.k;
      opts.t = params.t;
      emb = build_diffusion_embedding(*graph, opts);
      if (file) save_embedding(*file, key, emb);
    }
    if (emb.coords.size() != graph->node_count() * static_cast<std::size_t>(emb.k)) {
      throw MetricError("embedding does not match the grid graph");
    }
    emb.source_revision = graph->source_revision;
    out.metric = AssistingMetric::diffusion(graph, std::make_shared<DiffusionEmbedding>(std::move(emb)));
  } else {
    GeodesicTable table;
    if (use_file) {
      table = load_geodesic(*file, key);
    } else {
      table = build_geodesic_table(*graph);
      if (file) save_geodesic(*file, key, table);
    }
    if (table.n != graph->node_count()) throw MetricError("geodesic table does not match the grid graph");
    table.source_revision = graph->source_revision;
    out.metric = AssistingMetric::geodesic(graph, std::make_shared<GeodesicTable>(std::move(table)));
  }
  out.from_cache = use_file;
  out.prep_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace biam
