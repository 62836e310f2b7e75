#include "stack_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace fdmopt::detail {

namespace {

constexpr double kInf = 1e20;
// Stand-in for an infinite sample; small enough that q^2 differences survive.
constexpr double kFar = 1e12;

// Squared distance transform of a sampled function (Felzenszwalb-Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  d.assign(f.size(), 0.0);
  v.assign(f.size(), 0);
  z.assign(f.size() + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    auto intersect = [&](int p) { return ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p)); };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared Euclidean distance from each cell centre to the nearest empty cell
// centre; the grid is padded with one ring of empty cells.
std::vector<double> squared_edt(const LayerMask& m) {
  const int w = m.nx + 2;
  const int h = m.ny + 2;
  std::vector<double> g(static_cast<std::size_t>(w) * h, 0.0);
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i)
      if (m.at(i, j)) g[static_cast<std::size_t>(j + 1) * w + i + 1] = kFar;

  std::vector<double> f, d, z;
  std::vector<int> v;
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    for (int y = 0; y < h; ++y) f[y] = g[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.assign(g.begin() + static_cast<std::ptrdiff_t>(y) * w, g.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    edt_1d(f, d, v, z);
    std::copy(d.begin(), d.end(), g.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  std::vector<double> out(static_cast<std::size_t>(m.nx) * m.ny, 0.0);
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i)
      out[static_cast<std::size_t>(j) * m.nx + i] = g[static_cast<std::size_t>(j + 1) * w + i + 1];
  return out;
}

std::vector<std::uint8_t> dilate4(const std::vector<std::uint8_t>& cells, int nx, int ny) {
  std::vector<std::uint8_t> out(cells.size(), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * nx + i;
      if (!cells[c]) continue;
      out[c] = 1;
      if (i > 0) out[c - 1] = 1;
      if (i + 1 < nx) out[c + 1] = 1;
      if (j > 0) out[c - nx] = 1;
      if (j + 1 < ny) out[c + nx] = 1;
    }
  }
  return out;
}

// City-block distance to the nearest empty cell (outside counts as empty).
std::vector<int> cityblock_depth(const LayerMask& m) {
  const int big = std::numeric_limits<int>::max() / 4;
  std::vector<int> d(m.cells.size(), 0);
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * m.nx + i;
      if (!m.cells[c]) continue;
      const int left = i > 0 ? d[c - 1] : 0;
      const int down = j > 0 ? d[c - m.nx] : 0;
      d[c] = std::min(big, std::min(left, down) + 1);
    }
  }
  for (int j = m.ny - 1; j >= 0; --j) {
    for (int i = m.nx - 1; i >= 0; --i) {
      const std::size_t c = static_cast<std::size_t>(j) * m.nx + i;
      if (!m.cells[c]) continue;
      const int right = i + 1 < m.nx ? d[c + 1] : 0;
      const int up = j + 1 < m.ny ? d[c + m.nx] : 0;
      d[c] = std::min(d[c], std::min(right, up) + 1);
    }
  }
  return d;
}

MaskInfo describe_mask(const LayerMask& m, double pitch) {
  MaskInfo info;
  info.mask = &m;
  info.comp_cells.assign(static_cast<std::size_t>(m.component_count), 0);
  info.comp_centroid.assign(static_cast<std::size_t>(m.component_count), Vec2::Zero());
  info.comp_inscribed.assign(static_cast<std::size_t>(m.component_count), 0.0);
  const std::vector<double> dt2 = squared_edt(m);
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * m.nx + i;
      if (!m.cells[c]) continue;
      ++info.cells;
      info.occupied.push_back(static_cast<int>(c));
      info.boundary_edges += !m.at(i - 1, j) + !m.at(i + 1, j) + !m.at(i, j - 1) + !m.at(i, j + 1);
      const std::size_t lab = static_cast<std::size_t>(m.labels[c] - 1);
      ++info.comp_cells[lab];
      info.comp_centroid[lab] += Vec2((i + 0.5) * pitch, (j + 0.5) * pitch);
      info.comp_inscribed[lab] = std::max(info.comp_inscribed[lab], std::sqrt(dt2[c]));
    }
  }
  for (std::size_t r = 0; r < info.comp_cells.size(); ++r) info.comp_centroid[r] /= info.comp_cells[r];
  info.dilated = dilate4(m.cells, m.nx, m.ny);

  // Chained travel between islands, sampled at a quarter cell.
  for (std::size_t r = 1; r < info.comp_centroid.size(); ++r) {
    const Vec2 a = info.comp_centroid[r - 1];
    const Vec2 b = info.comp_centroid[r];
    const double len = (b - a).norm();
    const int samples = std::max(1, static_cast<int>(std::ceil(len / (0.25 * pitch))));
    int free = 0;
    for (int s = 0; s < samples; ++s) {
      const Vec2 p = a + (b - a) * ((s + 0.5) / samples);
      if (!m.at(static_cast<int>(std::floor(p.x() / pitch)), static_cast<int>(std::floor(p.y() / pitch)))) ++free;
    }
    info.travel_mm += len;
    info.free_travel_mm += len * free / samples;
  }
  return info;
}

}  // namespace

StackAnalysis analyse_stack(const LayerStack& stack) {
  StackAnalysis a;
  a.stack = &stack;
  const int nx = stack.nx;
  const int ny = stack.ny;
  const double p = stack.pitch;
  const double cell_area = p * p;
  const double lh = stack.layer_height;
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;

  std::map<const LayerMask*, int> index;
  a.layer_mask.reserve(stack.size());
  for (const Layer& layer : stack.layers) {
    auto [it, inserted] = index.emplace(layer.mask.get(), static_cast<int>(a.masks.size()));
    if (inserted) a.masks.push_back(describe_mask(*layer.mask, p));
    a.layer_mask.push_back(it->second);
  }

  std::vector<std::uint8_t> footprint(plane, 0);
  for (const MaskInfo& m : a.masks)
    for (int c : m.occupied) footprint[static_cast<std::size_t>(c)] = 1;
  a.footprint_area = static_cast<double>(std::count(footprint.begin(), footprint.end(), 1)) * cell_area;

  a.unsupported_cells.assign(stack.size(), 0);
  std::vector<int> last_occupied(plane, -1);
  std::vector<double> support_projection(plane, 0.0);
  std::vector<std::uint8_t> unsupported(plane, 0);
  double height_weighted = 0.0;

  for (std::size_t l = 1; l < stack.size(); ++l) {
    if (a.layer_mask[l] == a.layer_mask[l - 1]) continue;
    const MaskInfo& prev = a.mask_of(l - 1);
    const MaskInfo& cur = a.mask_of(l);
    for (int c : prev.occupied) last_occupied[static_cast<std::size_t>(c)] = static_cast<int>(l) - 1;

    std::fill(unsupported.begin(), unsupported.end(), 0);
    std::vector<double> island_gap(cur.comp_cells.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> anchored(cur.comp_cells.size(), false);
    for (int c : cur.occupied) {
      const auto cu = static_cast<std::size_t>(c);
      const std::size_t lab = static_cast<std::size_t>(cur.mask->labels[cu] - 1);
      if (prev.dilated[cu]) {
        anchored[lab] = true;
        continue;
      }
      unsupported[cu] = 1;
      const int below = last_occupied[cu];
      const double gap = (below < 0 ? static_cast<double>(l) : static_cast<double>(l) - below - 1) * lh;
      ++a.unsupported_cells[l];
      a.interface_area += cell_area;
      a.support_volume_raw += gap * cell_area;
      height_weighted += gap * cell_area;
      support_projection[cu] = 1.0;
      island_gap[lab] = std::min(island_gap[lab], gap);
    }
    for (std::size_t r = 0; r < anchored.size(); ++r) {
      if (!anchored[r]) a.islands.push_back({static_cast<int>(l), cur.comp_cells[r], island_gap[r]});
    }

    // Unsupported straight runs anchored by supported part cells at both ends.
    auto scan = [&](int outer_n, int inner_n, auto cell_at) {
      for (int o = 0; o < outer_n; ++o) {
        int run = 0;
        bool anchored_start = false;
        for (int t = 0; t < inner_n; ++t) {
          const std::size_t c = cell_at(o, t);
          const bool filled = cur.mask->cells[c] != 0;
          if (filled && unsupported[c]) {
            ++run;
          } else {
            if (run > 0 && anchored_start && filled) {
              const double span = run * p;
              if (span > a.max_bridge_mm) {
                a.max_bridge_mm = span;
                a.bridge_layer = static_cast<int>(l);
              }
            }
            run = 0;
            anchored_start = filled;
          }
        }
      }
    };
    scan(ny, nx, [&](int j, int i) { return static_cast<std::size_t>(j) * nx + i; });
    scan(nx, ny, [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; });
  }

  if (a.interface_area > 0.0) {
    a.support_mean_height = height_weighted / a.interface_area;
    std::vector<std::uint8_t> proj(plane, 0);
    for (std::size_t c = 0; c < plane; ++c) proj[c] = support_projection[c] > 0.0;
    const auto dil = dilate4(proj, nx, ny);
    a.support_footprint_area = static_cast<double>(std::count(dil.begin(), dil.end(), 1)) * cell_area;
    std::vector<int> labels;
    a.support_components = label_regions(dil, nx, ny, labels);
  }
  return a;
}

double effective_flow(const PrintConfig& config, const Calibration& cal) {
  return std::min(config.max_volumetric_speed, cal.nominal_flow);
}

std::vector<LayerFill> layer_fill(const StackAnalysis& a, const PrintConfig& config, const Calibration& cal) {
  const LayerStack& stack = *a.stack;
  const std::size_t layers = stack.size();
  const int nx = stack.nx;
  const std::size_t plane = static_cast<std::size_t>(nx) * stack.ny;
  const double p = stack.pitch;
  const double lw = cal.line_width;
  const int band = std::max(1, static_cast<int>(std::lround(config.perimeters * lw / p)));
  const double infill_contact =
      1.0 - std::pow(1.0 - config.infill_density, cal.pattern_contact[config.infill_pattern]);

  // Per mask: interior cells with their number of edges to the perimeter band.
  std::vector<std::vector<std::pair<int, int>>> band_edges(a.masks.size());
  for (std::size_t mi = 0; mi < a.masks.size(); ++mi) {
    const LayerMask& m = *a.masks[mi].mask;
    const std::vector<int> depth = cityblock_depth(m);
    for (int c : a.masks[mi].occupied) {
      const auto cu = static_cast<std::size_t>(c);
      if (depth[cu] <= band) continue;
      const int i = c % nx;
      const int j = c / nx;
      int edges = 0;
      auto check = [&](int ii, int jj) {
        if (m.at(ii, jj) && depth[static_cast<std::size_t>(jj) * nx + ii] <= band) ++edges;
      };
      check(i - 1, j);
      check(i + 1, j);
      check(i, j - 1);
      check(i, j + 1);
      if (edges > 0) band_edges[mi].push_back({c, edges});
    }
  }

  // Bottom skin: fewer than `bottom_solid_layers` occupied layers below.
  std::vector<std::uint8_t> bottom_skin(layers * plane, 0);
  std::vector<int> run(plane, 0);
  for (std::size_t l = 0; l < layers; ++l) {
    const MaskInfo& m = a.mask_of(l);
    std::uint8_t* flags = bottom_skin.data() + l * plane;
    for (int c : m.occupied) flags[c] = run[static_cast<std::size_t>(c)] < config.bottom_solid_layers;
    // Advance the run counters to include layer l.
    if (l + 1 < layers && a.layer_mask[l + 1] == a.layer_mask[l]) {
      for (int c : m.occupied) ++run[static_cast<std::size_t>(c)];
    } else {
      std::vector<int> next(plane, 0);
      for (int c : m.occupied) next[static_cast<std::size_t>(c)] = run[static_cast<std::size_t>(c)] + 1;
      run.swap(next);
    }
  }

  std::vector<LayerFill> fill(layers);
  std::fill(run.begin(), run.end(), 0);
  std::vector<std::uint8_t> skin(plane, 0);
  for (std::size_t l = layers; l-- > 0;) {
    const MaskInfo& m = a.mask_of(l);
    const std::uint8_t* bottom = bottom_skin.data() + l * plane;
    LayerFill& f = fill[l];
    f.cells = m.cells;
    f.boundary_mm = m.boundary_edges * p;
    for (int c : m.occupied) {
      const auto cu = static_cast<std::size_t>(c);
      skin[cu] = bottom[cu] || run[cu] < config.top_solid_layers;
      f.skin_cells += skin[cu];
    }
    for (const auto& [c, edges] : band_edges[static_cast<std::size_t>(a.layer_mask[l])]) {
      f.pi_edges += edges;
      f.pi_contact += edges * (skin[static_cast<std::size_t>(c)] ? 1.0 : infill_contact);
    }
    if (l > 0 && a.layer_mask[l - 1] == a.layer_mask[l]) {
      for (int c : m.occupied) ++run[static_cast<std::size_t>(c)];
    } else {
      std::vector<int> next(plane, 0);
      for (int c : m.occupied) next[static_cast<std::size_t>(c)] = run[static_cast<std::size_t>(c)] + 1;
      run.swap(next);
    }

    const double area = f.cells * p * p;
    const double thickness = l == 0 ? config.first_layer_height : stack.layer_height;
    if (f.cells > 0) {
      const double shell = std::min(1.0, f.boundary_mm * config.perimeters * lw / area);
      const double sparse = static_cast<double>(f.cells - f.skin_cells) / f.cells;
      const double solid = 1.0 - sparse;
      f.volume_mm3 = area * thickness * (solid + sparse * (shell + config.infill_density * (1.0 - shell)));
    }
  }
  return fill;
}

}  // namespace fdmopt::detail
