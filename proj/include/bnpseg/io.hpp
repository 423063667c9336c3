#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bnpseg/likelihood.hpp"
#include "bnpseg/partition.hpp"
#include "bnpseg/samplers.hpp"

namespace bnpseg {

// Per-pixel integer raster; in a problem file it maps every pixel to the
// site that covers it.
struct LabelRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::int64_t> values;  // row-major

  std::int64_t at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  bool operator==(const LabelRaster&) const = default;
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  bool operator==(const RgbImage&) const = default;
};

// A segmentation problem: site graph, histograms and optional extras.
struct Problem {
  SiteGraph graph;
  Observations obs;
  std::optional<std::vector<Label>> ground_truth;
  std::optional<LabelRaster> footprint;
};

inline constexpr int kProblemFormatVersion = 1;

// Text format, one record per line, '#' starts a comment:
//
//   bnpseg-problem 1
//   sites <n> bins <D>
//   histograms          followed by n rows of D counts
//   edges <m>           followed by m rows "i j beta"
//   ground_truth        optional, followed by n labels (one per line)
//   footprint <W> <H>   optional, followed by H rows of W site indices
//   end
//
// Throws ParseError naming the line on any malformed or inconsistent row.
Problem parse_problem(std::istream& in);
Problem load_problem(const std::filesystem::path& path);
void write_problem(std::ostream& out, const Problem& problem);
void save_problem(const std::filesystem::path& path, const Problem& problem);

struct SyntheticSpec {
  std::size_t width = 20;
  std::size_t height = 20;
  std::size_t clusters = 4;        // planted regions
  double concentration = 0.5;      // symmetric Dirichlet for planted multinomials
  std::size_t pixels_per_site = 60;
  std::size_t bins = 16;
  double beta = 0.02;
  std::size_t cell_pixels = 4;     // footprint side length per site
  std::uint64_t seed = 1;
};

// Lattice problem with contiguous planted regions grown from random seeds
// and per-region multinomial histograms. Ground truth and footprint are
// filled in.
Problem synthesize(const SyntheticSpec& spec);

// Per-channel levels (r, g, b) with r * g * b == bins, as even as possible.
std::array<std::size_t, 3> quantization_levels(std::size_t bins);
std::size_t quantize_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b,
                         const std::array<std::size_t, 3>& levels);

// One site per super-pixel id, histograms from uniform RGB quantization,
// edges between super-pixels sharing a 4-connected pixel boundary. Ids must
// cover 0..n-1 with no gaps.
Problem ingest_superpixels(const RgbImage& image, const LabelRaster& superpixels,
                           std::size_t bins, double beta);

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

// PGM (P2/P5) or a text raster: "W H" followed by H rows of W integers.
LabelRaster read_label_raster(const std::filesystem::path& path);

// Deterministic colour for the i-th cluster (canonical numbering).
std::array<std::uint8_t, 3> cluster_colour(std::size_t index);

// Fills each site's footprint with its cluster colour. Labels are
// canonicalized first, so equal partitions give identical images. Throws
// InputError when the problem has no footprint.
RgbImage render_labels(const Problem& problem, std::span<const Label> labels);

// One integer per site per line.
std::vector<Label> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const Label> labels);

// Columns: iteration,log_posterior_unnorm,k,seconds
void write_trace_csv(std::ostream& out, const ChainTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const ChainTrace& trace);

}  // namespace bnpseg
