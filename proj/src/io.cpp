#include "bnpseg/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "bnpseg/errors.hpp"

namespace bnpseg {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Splits on whitespace.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
T parse_number(std::string_view text, std::size_t line, const char* what) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError(line, std::string("expected ") + what + ", got '" +
                               std::string(text) + "'");
  }
  return value;
}

// Reads non-empty, non-comment lines with their line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string_view>& out) {
    while (std::getline(in_, buffer_)) {
      ++line_;
      const auto hash = buffer_.find('#');
      if (hash != std::string::npos) buffer_.resize(hash);
      out = tokens(buffer_);
      if (!out.empty()) return true;
    }
    ++line_;
    return false;
  }

  std::vector<std::string_view> require(const char* what) {
    std::vector<std::string_view> out;
    if (!next(out)) throw ParseError(line_, std::string("unexpected end of file, ") + what);
    return out;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
};

void expect_count(const std::vector<std::string_view>& row, std::size_t n,
                  std::size_t line, const char* what) {
  if (row.size() != n) {
    throw ParseError(line, std::string(what) + ": expected " + std::to_string(n) +
                               " fields, got " + std::to_string(row.size()));
  }
}

}  // namespace

Problem parse_problem(std::istream& in) {
  LineReader reader(in);
  auto row = reader.require("missing header");
  if (row.size() != 2 || row[0] != "bnpseg-problem") {
    throw ParseError(reader.line(), "expected header 'bnpseg-problem <version>'");
  }
  const int version = parse_number<int>(row[1], reader.line(), "format version");
  if (version != kProblemFormatVersion) {
    throw ParseError(reader.line(), "unsupported format version " + std::to_string(version));
  }

  row = reader.require("missing 'sites' line");
  if (row.size() != 4 || row[0] != "sites" || row[2] != "bins") {
    throw ParseError(reader.line(), "expected 'sites <n> bins <D>'");
  }
  const auto n = parse_number<std::size_t>(row[1], reader.line(), "site count");
  const auto bins = parse_number<std::size_t>(row[3], reader.line(), "bin count");
  if (n == 0 || bins == 0) throw ParseError(reader.line(), "sites and bins must be positive");

  row = reader.require("missing 'histograms' section");
  if (row.size() != 1 || row[0] != "histograms") {
    throw ParseError(reader.line(), "expected 'histograms'");
  }
  std::vector<Count> counts;
  counts.reserve(n * bins);
  for (std::size_t s = 0; s < n; ++s) {
    row = reader.require("histogram rows");
    expect_count(row, bins, reader.line(), "histogram row");
    Count total = 0;
    for (auto tok : row) {
      const auto c = parse_number<Count>(tok, reader.line(), "non-negative count");
      if (c < 0) throw ParseError(reader.line(), "negative count");
      total += c;
      counts.push_back(c);
    }
    if (total == 0) throw ParseError(reader.line(), "histogram row sums to zero");
  }

  row = reader.require("missing 'edges' section");
  if (row.size() != 2 || row[0] != "edges") {
    throw ParseError(reader.line(), "expected 'edges <m>'");
  }
  const auto m = parse_number<std::size_t>(row[1], reader.line(), "edge count");
  std::vector<Edge> edges;
  edges.reserve(m);
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::size_t e = 0; e < m; ++e) {
    row = reader.require("edge rows");
    expect_count(row, 3, reader.line(), "edge row");
    const auto i = parse_number<std::uint64_t>(row[0], reader.line(), "site index");
    const auto j = parse_number<std::uint64_t>(row[1], reader.line(), "site index");
    const auto beta = parse_number<double>(row[2], reader.line(), "coupling");
    if (i >= n || j >= n) throw ParseError(reader.line(), "edge site index out of range");
    if (i == j) throw ParseError(reader.line(), "self-loop edge");
    if (!(beta > 0.0)) throw ParseError(reader.line(), "edge coupling must be positive");
    if (!seen.emplace(std::min(i, j), std::max(i, j)).second) {
      throw ParseError(reader.line(), "duplicate edge (" + std::to_string(i) + ", " +
                                          std::to_string(j) + ")");
    }
    edges.push_back({static_cast<SiteIndex>(i), static_cast<SiteIndex>(j), beta});
  }
  Problem problem;
  problem.graph = SiteGraph(n, std::move(edges));
  problem.obs = Observations(n, bins, std::move(counts));

  bool ended = false;
  while (!ended) {
    row = reader.require("missing 'end'");
    if (row[0] == "end" && row.size() == 1) {
      ended = true;
    } else if (row[0] == "ground_truth" && row.size() == 1) {
      if (problem.ground_truth) throw ParseError(reader.line(), "repeated ground_truth");
      std::vector<Label> labels;
      labels.reserve(n);
      for (std::size_t s = 0; s < n; ++s) {
        row = reader.require("ground truth rows");
        expect_count(row, 1, reader.line(), "ground truth row");
        labels.push_back(parse_number<Label>(row[0], reader.line(), "label"));
      }
      problem.ground_truth = std::move(labels);
    } else if (row[0] == "footprint" && row.size() == 3) {
      if (problem.footprint) throw ParseError(reader.line(), "repeated footprint");
      LabelRaster raster;
      raster.width = parse_number<std::size_t>(row[1], reader.line(), "width");
      raster.height = parse_number<std::size_t>(row[2], reader.line(), "height");
      if (raster.width == 0 || raster.height == 0) {
        throw ParseError(reader.line(), "footprint dimensions must be positive");
      }
      raster.values.reserve(raster.width * raster.height);
      for (std::size_t y = 0; y < raster.height; ++y) {
        row = reader.require("footprint rows");
        expect_count(row, raster.width, reader.line(), "footprint row");
        for (auto tok : row) {
          const auto v = parse_number<std::int64_t>(tok, reader.line(), "site index");
          if (v < 0 || static_cast<std::size_t>(v) >= n) {
            throw ParseError(reader.line(), "footprint site index out of range");
          }
          raster.values.push_back(v);
        }
      }
      problem.footprint = std::move(raster);
    } else {
      throw ParseError(reader.line(), "unknown section '" + std::string(row[0]) + "'");
    }
  }
  std::vector<std::string_view> trailing;
  if (reader.next(trailing)) throw ParseError(reader.line(), "content after 'end'");
  return problem;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path.string());
  try {
    return parse_problem(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

void write_problem(std::ostream& out, const Problem& problem) {
  const std::size_t n = problem.graph.num_sites();
  const std::size_t bins = problem.obs.bins();
  out << "bnpseg-problem " << kProblemFormatVersion << '\n';
  out << "sites " << n << " bins " << bins << '\n';
  out << "histograms\n";
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = problem.obs.row(static_cast<SiteIndex>(s));
    for (std::size_t d = 0; d < bins; ++d) out << (d ? " " : "") << row[d];
    out << '\n';
  }
  out << "edges " << problem.graph.num_edges() << '\n';
  for (const Edge& e : problem.graph.edges()) {
    out << e.i << ' ' << e.j << ' ' << format_double(e.beta) << '\n';
  }
  if (problem.ground_truth) {
    out << "ground_truth\n";
    for (Label l : *problem.ground_truth) out << l << '\n';
  }
  if (problem.footprint) {
    const LabelRaster& f = *problem.footprint;
    out << "footprint " << f.width << ' ' << f.height << '\n';
    for (std::size_t y = 0; y < f.height; ++y) {
      for (std::size_t x = 0; x < f.width; ++x) out << (x ? " " : "") << f.at(x, y);
      out << '\n';
    }
  }
  out << "end\n";
}

void save_problem(const std::filesystem::path& path, const Problem& problem) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_problem(out, problem);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Label> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open label file " + path.string());
  LineReader reader(in);
  std::vector<Label> labels;
  std::vector<std::string_view> row;
  while (reader.next(row)) {
    expect_count(row, 1, reader.line(), "label row");
    labels.push_back(parse_number<Label>(row[0], reader.line(), "label"));
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, std::span<const Label> labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Label l : labels) out << l << '\n';
}

void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
  out << "iteration,log_posterior_unnorm,k,seconds\n";
  for (const TraceRecord& r : trace.records) {
    out << r.iteration << ',' << format_double(r.log_posterior) << ',' << r.clusters << ','
        << format_double(r.seconds) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const ChainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace_csv(out, trace);
}

}  // namespace bnpseg
