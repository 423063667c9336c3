#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>

#include "bnpseg/errors.hpp"
#include "bnpseg/io.hpp"
#include "bnpseg/random.hpp"

namespace bnpseg {
namespace {

// Netpbm header tokens, skipping whitespace and '#' comments.
class PnmReader {
 public:
  PnmReader(std::vector<std::uint8_t> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw InputError(name_ + ": truncated header");
    return out;
  }

  std::size_t number() {
    const std::string t = token();
    std::size_t v = 0;
    for (char c : t) {
      if (c < '0' || c > '9') throw InputError(name_ + ": expected a number, got '" + t + "'");
      v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    return v;
  }

  // Binary payload starts after exactly one whitespace byte.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw InputError(name_ + ": malformed header");
    }
    ++pos_;
  }

  std::size_t binary_sample(std::size_t maxval) {
    const std::size_t width = maxval > 255 ? 2 : 1;
    if (pos_ + width > bytes_.size()) throw InputError(name_ + ": truncated pixel data");
    std::size_t v = bytes_[pos_++];
    if (width == 2) v = (v << 8) | bytes_[pos_++];
    return v;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::vector<std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::array<std::uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto to_byte = [](double u) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0));
  };
  return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

std::vector<double> dirichlet_draw(std::size_t dim, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> p(dim);
  double total = 0.0;
  for (double& v : p) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    // Every gamma underflowed; put all mass on one bin.
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(dim))] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

Problem synthesize(const SyntheticSpec& spec) {
  if (spec.width == 0 || spec.height == 0) throw ConfigError("synth: empty lattice");
  const std::size_t n = spec.width * spec.height;
  if (spec.clusters == 0 || spec.clusters > n) {
    throw ConfigError("synth: planted cluster count must be in [1, sites]");
  }
  if (spec.bins == 0 || spec.pixels_per_site == 0 || spec.cell_pixels == 0) {
    throw ConfigError("synth: bins, pixels_per_site and cell_pixels must be positive");
  }
  if (!(spec.concentration > 0.0)) throw ConfigError("synth: concentration must be positive");
  if (!(spec.beta >= 0.0)) throw ConfigError("synth: beta must be >= 0");

  Rng rng(spec.seed);
  Problem problem;
  problem.graph = lattice_graph(spec.width, spec.height, spec.beta);
  const SiteGraph neighbours = lattice_graph(spec.width, spec.height, 1.0);

  // Randomized multi-source flood fill: every region is connected.
  std::vector<Label> truth(n, -1);
  std::vector<SiteIndex> frontier;
  for (std::size_t k = 0; k < spec.clusters; ++k) {
    SiteIndex s;
    do {
      s = static_cast<SiteIndex>(uniform01(rng) * static_cast<double>(n));
    } while (truth[s] != -1);
    truth[s] = static_cast<Label>(k);
    frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(frontier.size()));
    const SiteIndex s = frontier[pick];
    frontier[pick] = frontier.back();
    frontier.pop_back();
    for (const Neighbor& nb : neighbours.neighbors(s)) {
      if (truth[nb.site] != -1) continue;
      truth[nb.site] = truth[s];
      frontier.push_back(nb.site);
    }
  }

  std::vector<std::vector<double>> cumulative(spec.clusters);
  for (auto& c : cumulative) {
    const std::vector<double> p = dirichlet_draw(spec.bins, spec.concentration, rng);
    c.resize(spec.bins);
    std::partial_sum(p.begin(), p.end(), c.begin());
  }
  std::vector<Count> counts(n * spec.bins, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& cdf = cumulative[static_cast<std::size_t>(truth[s])];
    for (std::size_t px = 0; px < spec.pixels_per_site; ++px) {
      const double u = uniform01(rng) * cdf.back();
      const auto bin = static_cast<std::size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      ++counts[s * spec.bins + std::min(bin, spec.bins - 1)];
    }
  }
  problem.obs = Observations(n, spec.bins, std::move(counts));
  problem.ground_truth = std::move(truth);

  LabelRaster footprint;
  footprint.width = spec.width * spec.cell_pixels;
  footprint.height = spec.height * spec.cell_pixels;
  footprint.values.resize(footprint.width * footprint.height);
  for (std::size_t y = 0; y < footprint.height; ++y) {
    for (std::size_t x = 0; x < footprint.width; ++x) {
      footprint.values[y * footprint.width + x] = static_cast<std::int64_t>(
          (y / spec.cell_pixels) * spec.width + x / spec.cell_pixels);
    }
  }
  problem.footprint = std::move(footprint);
  return problem;
}

std::array<std::size_t, 3> quantization_levels(std::size_t bins) {
  if (bins == 0) throw ConfigError("quantization: bins must be positive");
  std::array<std::size_t, 3> best{bins, 1, 1};
  std::size_t best_spread = bins;
  for (std::size_t a = 1; a * a * a <= bins; ++a) {
    if (bins % a) continue;
    for (std::size_t b = a; a * b * b <= bins; ++b) {
      if ((bins / a) % b) continue;
      const std::size_t c = bins / a / b;
      if (c - a < best_spread) {
        best_spread = c - a;
        best = {a, b, c};
      }
    }
  }
  // Finest resolution on green, then red, then blue.
  return {best[1], best[2], best[0]};
}

std::size_t quantize_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b,
                         const std::array<std::size_t, 3>& levels) {
  const std::size_t qr = r * levels[0] / 256;
  const std::size_t qg = g * levels[1] / 256;
  const std::size_t qb = b * levels[2] / 256;
  return (qr * levels[1] + qg) * levels[2] + qb;
}

Problem ingest_superpixels(const RgbImage& image, const LabelRaster& superpixels,
                           std::size_t bins, double beta) {
  if (image.width != superpixels.width || image.height != superpixels.height) {
    throw InputError("ingest: image is " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) + " but super-pixel map is " +
                     std::to_string(superpixels.width) + "x" +
                     std::to_string(superpixels.height));
  }
  if (superpixels.values.empty()) throw InputError("ingest: empty super-pixel map");
  if (image.rgb.size() != 3 * image.width * image.height) {
    throw InputError("ingest: image buffer does not match its dimensions");
  }
  if (!(beta >= 0.0)) throw ConfigError("ingest: beta must be >= 0");
  const auto levels = quantization_levels(bins);

  std::int64_t max_id = -1;
  for (std::int64_t v : superpixels.values) {
    if (v < 0) throw InputError("ingest: negative super-pixel id");
    max_id = std::max(max_id, v);
  }
  const auto n = static_cast<std::size_t>(max_id + 1);
  std::vector<Count> counts(n * bins, 0);
  std::vector<bool> present(n, false);
  for (std::size_t p = 0; p < superpixels.values.size(); ++p) {
    const auto site = static_cast<std::size_t>(superpixels.values[p]);
    present[site] = true;
    const std::uint8_t* px = &image.rgb[3 * p];
    ++counts[site * bins + quantize_rgb(px[0], px[1], px[2], levels)];
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (!present[s]) {
      throw InputError("ingest: super-pixel id " + std::to_string(s) +
                       " has no pixels (ids must be 0..n-1 without gaps)");
    }
  }

  std::vector<Edge> edges;
  if (beta > 0.0) {
    std::set<std::pair<SiteIndex, SiteIndex>> pairs;
    auto link = [&](std::int64_t a, std::int64_t b) {
      if (a == b) return;
      pairs.emplace(static_cast<SiteIndex>(std::min(a, b)), static_cast<SiteIndex>(std::max(a, b)));
    };
    for (std::size_t y = 0; y < superpixels.height; ++y) {
      for (std::size_t x = 0; x < superpixels.width; ++x) {
        if (x + 1 < superpixels.width) link(superpixels.at(x, y), superpixels.at(x + 1, y));
        if (y + 1 < superpixels.height) link(superpixels.at(x, y), superpixels.at(x, y + 1));
      }
    }
    for (const auto& [i, j] : pairs) edges.push_back({i, j, beta});
  }

  Problem problem;
  problem.graph = SiteGraph(n, std::move(edges));
  problem.obs = Observations(n, bins, std::move(counts));
  problem.footprint = superpixels;
  return problem;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  PnmReader reader(slurp(path), path.string());
  const std::string magic = reader.token();
  if (magic != "P6" && magic != "P3") throw InputError(path.string() + ": not a PPM (P3/P6)");
  RgbImage image;
  image.width = reader.number();
  image.height = reader.number();
  const std::size_t maxval = reader.number();
  if (maxval == 0 || maxval > 65535) throw InputError(path.string() + ": bad maxval");
  if (magic == "P6") reader.skip_single_space();
  image.rgb.resize(3 * image.width * image.height);
  for (auto& byte : image.rgb) {
    const std::size_t v = magic == "P6" ? reader.binary_sample(maxval) : reader.number();
    if (v > maxval) throw InputError(path.string() + ": sample exceeds maxval");
    byte = static_cast<std::uint8_t>(v * 255 / maxval);
  }
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LabelRaster read_label_raster(const std::filesystem::path& path) {
  PnmReader reader(slurp(path), path.string());
  const std::string first = reader.token();
  LabelRaster raster;
  if (first == "P2" || first == "P5") {
    raster.width = reader.number();
    raster.height = reader.number();
    const std::size_t maxval = reader.number();
    if (maxval == 0 || maxval > 65535) throw InputError(path.string() + ": bad maxval");
    if (first == "P5") reader.skip_single_space();
    raster.values.resize(raster.width * raster.height);
    for (auto& v : raster.values) {
      v = static_cast<std::int64_t>(first == "P5" ? reader.binary_sample(maxval)
                                                  : reader.number());
    }
    return raster;
  }
  // Plain text: width height, then the grid.
  std::size_t width = 0;
  for (char c : first) {
    if (c < '0' || c > '9') throw InputError(path.string() + ": unrecognized raster format");
    width = width * 10 + static_cast<std::size_t>(c - '0');
  }
  raster.width = width;
  raster.height = reader.number();
  raster.values.resize(raster.width * raster.height);
  for (auto& v : raster.values) v = static_cast<std::int64_t>(reader.number());
  return raster;
}

std::array<std::uint8_t, 3> cluster_colour(std::size_t index) {
  constexpr double kGolden = 0.618033988749894848;
  const double hue = std::fmod(0.08 + kGolden * static_cast<double>(index), 1.0);
  const double sat = (index / 5) % 2 ? 0.55 : 0.8;
  const double val = (index / 10) % 2 ? 0.7 : 0.95;
  return hsv_to_rgb(hue, sat, val);
}

RgbImage render_labels(const Problem& problem, std::span<const Label> labels) {
  if (!problem.footprint) {
    throw InputError("render: problem has no pixel footprint; use trace output instead");
  }
  if (labels.size() != problem.graph.num_sites()) {
    throw InputError("render: expected " + std::to_string(problem.graph.num_sites()) +
                     " labels, got " + std::to_string(labels.size()));
  }
  const std::vector<std::uint32_t> canonical =
      Partition::from_labels(labels).canonical_labels();
  const LabelRaster& f = *problem.footprint;
  RgbImage image;
  image.width = f.width;
  image.height = f.height;
  image.rgb.resize(3 * f.width * f.height);
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    const auto colour = cluster_colour(canonical[static_cast<std::size_t>(f.values[p])]);
    std::copy(colour.begin(), colour.end(), image.rgb.begin() + 3 * p);
  }
  return image;
}

}  // namespace bnpseg
