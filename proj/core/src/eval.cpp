#include "vadtl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vadtl {

double accuracy(std::span<const FrameLabel> predicted,
                std::span<const FrameLabel> reference) {
  if (predicted.size() != reference.size())
    throw std::invalid_argument("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == reference[i]) ++hits;
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(predicted.size());
}

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("similarity: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-d2 / 2.0);
}

SimilarityMatrix similarity_matrix(
    const std::vector<const FeatureMatrix*>& corpora,
    const std::vector<std::string>& names) {
  if (corpora.size() < 2)
    throw std::invalid_argument("similarity_matrix: need at least 2 corpora");
  if (corpora.size() != names.size())
    throw std::invalid_argument("similarity_matrix: names/corpora mismatch");

  const Normalizer shared = fit_normalizer(corpora, "similarity-union");
  std::vector<std::vector<double>> centroids;
  centroids.reserve(corpora.size());
  for (const auto* c : corpora)
    centroids.push_back(compute_centroid(apply_normalizer(shared, *c)));

  SimilarityMatrix m;
  m.names = names;
  const std::size_t n = corpora.size();
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m.values[i * n + j] =
          i == j ? 1.0 : similarity(centroids[i], centroids[j]);
  return m;
}

void save_similarity_csv(const std::filesystem::path& path,
                         const SimilarityMatrix& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write: " + path.string());
  f << "corpus";
  for (const auto& n : m.names) f << ',' << n;
  f << '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.size(); ++i) {
    f << m.names[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12f", m.at(i, j));
      f << ',' << buf;
    }
    f << '\n';
  }
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_hinton_svg(const std::filesystem::path& path,
                     const SimilarityMatrix& m) {
  const double cell = 40.0, margin = 110.0, max_side = 36.0;
  const std::size_t n = m.size();
  const double w = margin + cell * static_cast<double>(n) + 20.0;
  const double h = margin + cell * static_cast<double>(n) + 20.0;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  svg << "  <rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";

  char buf[256];
  for (std::size_t j = 0; j < n; ++j) {
    const double x = margin + cell * (static_cast<double>(j) + 0.5);
    std::snprintf(buf, sizeof buf,
                  "  <text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"start\" transform=\"rotate(-60 %.1f %.1f)\">"
                  "%s</text>\n",
                  x, margin - 8.0, x, margin - 8.0,
                  xml_escape(m.names[j]).c_str());
    svg << buf;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double y = margin + cell * (static_cast<double>(i) + 0.5);
    std::snprintf(buf, sizeof buf,
                  "  <text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"end\">%s</text>\n",
                  margin - 8.0, y + 4.0, xml_escape(m.names[i]).c_str());
    svg << buf;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double side = max_side * m.at(i, j);  // side ratio == value ratio
      const double cx = margin + cell * (static_cast<double>(j) + 0.5);
      const double cy = margin + cell * (static_cast<double>(i) + 0.5);
      std::snprintf(buf, sizeof buf,
                    "  <rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" "
                    "height=\"%.3f\" fill=\"#334\"><title>%s vs %s: "
                    "%.6f</title></rect>\n",
                    cx - side / 2.0, cy - side / 2.0, side, side,
                    xml_escape(m.names[i]).c_str(),
                    xml_escape(m.names[j]).c_str(), m.at(i, j));
      svg << buf;
    }
  }
  svg << "</svg>\n";

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write: " + path.string());
  f << svg.str();
}

void ResultTable::sort_rows() {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a,
                                         const ResultRow& b) {
    if (a.pair != b.pair) return a.pair < b.pair;
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.scheme != b.scheme) return a.scheme < b.scheme;
    return a.seed < b.seed;
  });
}

double ResultTable::cell_mean(const std::string& pair, std::size_t depth,
                              const std::string& scheme) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.pair == pair && r.depth == depth && r.scheme == scheme) {
      acc += r.accuracy_pct;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("cell_mean: empty cell");
  return acc / static_cast<double>(n);
}

void save_results_csv(const std::filesystem::path& path,
                      const ResultTable& t) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write: " + path.string());
  f << "pair,depth,scheme,seed,accuracy_pct,pretrain_s,finetune_s\n";
  char buf[256];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%s,%llu,%.12f,%.3f,%.3f\n",
                  r.pair.c_str(), r.depth, r.scheme.c_str(),
                  static_cast<unsigned long long>(r.seed), r.accuracy_pct,
                  r.pretrain_s, r.finetune_s);
    f << buf;
  }
}

ResultTable load_results_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read: " + path.string());
  ResultTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("pair,", 0) == 0) continue;
    }
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      const std::size_t c = line.find(',', pos);
      cols.push_back(line.substr(pos, c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    if (cols.size() != 7)
      throw std::runtime_error("bad results row: " + line);
    ResultRow r;
    r.pair = cols[0];
    r.depth = static_cast<std::size_t>(std::stoul(cols[1]));
    r.scheme = cols[2];
    r.seed = std::stoull(cols[3]);
    r.accuracy_pct = std::stod(cols[4]);
    r.pretrain_s = std::stod(cols[5]);
    r.finetune_s = std::stod(cols[6]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::string render_result_table(const ResultTable& t) {
  if (t.rows.empty())
    throw std::invalid_argument("render_result_table: empty table");

  static const std::vector<std::string> scheme_order = {"LB", "S1",  "S2",
                                                        "S3t", "S3s", "UB"};
  static const std::map<std::string, std::string> display = {
      {"LB", "LB"},   {"S1", "S1"},   {"S2", "S2"},
      {"S3t", "S3(t)"}, {"S3s", "S3(s)"}, {"UB", "UB"}};

  std::set<std::size_t> depths;
  std::vector<std::string> pairs;  // first-seen order
  for (const auto& r : t.rows) {
    depths.insert(r.depth);
    if (std::find(pairs.begin(), pairs.end(), r.pair) == pairs.end())
      pairs.push_back(r.pair);
  }

  std::ostringstream out;
  out << "Transfer accuracy (%) by noise pair, scheme and depth\n";
  char buf[64];
  for (std::size_t depth : depths) {
    out << "-- " << depth << (depth == 1 ? " layer" : " layers") << " --\n";
    for (const auto& pair : pairs) {
      std::vector<std::string> cells;
      for (const auto& scheme : scheme_order) {
        bool present = false;
        for (const auto& r : t.rows)
          if (r.pair == pair && r.depth == depth && r.scheme == scheme) {
            present = true;
            break;
          }
        if (!present) continue;
        std::snprintf(buf, sizeof buf, "%.2f",
                      t.cell_mean(pair, depth, scheme));
        cells.push_back(display.at(scheme) + " " + buf);
      }
      if (cells.empty()) continue;
      out << pair;
      for (const auto& c : cells) out << " | " << c;
      out << '\n';
    }
  }
  return out.str();
}

void emit_result_table(const std::filesystem::path& path,
                       const ResultTable& t, const std::string& format) {
  if (format == "csv") {
    save_results_csv(path, t);
  } else if (format == "text") {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write: " + path.string());
    f << render_result_table(t);
  } else {
    throw std::invalid_argument("emit_result_table: unknown format " + format);
  }
}

}  // namespace vadtl
