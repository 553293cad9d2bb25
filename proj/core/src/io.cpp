#include "pcdm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "pcdm/error.hpp"

namespace pcdm {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Whitespace tokenizer that tracks line numbers.
class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    for (;;) {
      if (ls_ >> tok) return true;
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_;
      ls_.clear();
      ls_.str(line);
    }
  }
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::istringstream ls_;
  std::size_t line_ = 0;
};

template <typename T>
T expect_number(Tokens& tok, const char* what) {
  std::string s;
  if (!tok.next(s)) throw ParseError(std::string("unexpected end of file, expected ") + what, tok.line());
  T v{};
  if (!parse_number(s, v)) throw ParseError("bad " + std::string(what) + " '" + s + "'", tok.line());
  return v;
}

}  // namespace

GeneratedInstance read_instance(std::istream& in) {
  Tokens tok(in);
  std::string word;
  if (!tok.next(word) || word != "pcdm-instance") throw ParseError("missing pcdm-instance header", 1);
  if (!tok.next(word) || word != "v1") throw ParseError("unsupported version '" + word + "'", tok.line());
  const auto m = expect_number<std::size_t>(tok, "row count");
  const auto n = expect_number<std::size_t>(tok, "column count");
  const auto nnz = expect_number<std::size_t>(tok, "nonzero count");
  std::vector<Triplet> entries;
  entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    Triplet t;
    t.row = expect_number<std::size_t>(tok, "row index");
    t.col = expect_number<std::size_t>(tok, "column index");
    t.value = expect_number<double>(tok, "value");
    if (t.row >= m || t.col >= n) throw ParseError("index out of range", tok.line());
    entries.push_back(t);
  }
  GeneratedInstance inst;
  inst.A = SparseMatrix::from_triplets(m, n, std::move(entries));
  auto read_vector = [&](std::size_t len, const char* what) {
    std::vector<double> v(len);
    for (auto& x : v) x = expect_number<double>(tok, what);
    return v;
  };
  while (tok.next(word)) {
    if (word == "b:") {
      inst.b = read_vector(m, "b entry");
    } else if (word == "xstar:") {
      inst.xstar = read_vector(n, "xstar entry");
    } else if (word == "lambda:") {
      inst.lambda = expect_number<double>(tok, "lambda");
    } else if (word == "Fstar:") {
      inst.fstar = expect_number<double>(tok, "Fstar");
    } else {
      throw ParseError("unknown section '" + word + "'", tok.line());
    }
  }
  return inst;
}

GeneratedInstance read_instance(const std::string& path) {
  auto in = open_in(path);
  return read_instance(in);
}

void write_instance(std::ostream& out, const GeneratedInstance& inst) {
  const auto& A = inst.A;
  out << "pcdm-instance v1 " << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  for (std::size_t c = 0; c < A.cols(); ++c) {
    const auto col = A.col(c);
    for (std::size_t k = 0; k < col.nnz(); ++k) {
      out << col.index[k] << ' ' << c << ' ' << format_double(col.value[k]) << '\n';
    }
  }
  auto write_vector = [&](const char* name, const std::vector<double>& v) {
    out << name << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) out << format_double(v[i]) << (i + 1 == v.size() ? '\n' : ' ');
  };
  if (!inst.b.empty()) write_vector("b:", inst.b);
  if (!inst.xstar.empty()) write_vector("xstar:", inst.xstar);
  if (inst.lambda) out << "lambda:\n" << format_double(*inst.lambda) << '\n';
  if (inst.fstar) out << "Fstar:\n" << format_double(*inst.fstar) << '\n';
  if (!out) throw Error("write failed");
}

void write_instance(const std::string& path, const GeneratedInstance& inst) {
  auto out = open_out(path);
  write_instance(out, inst);
}

LabeledData read_libsvm(std::istream& in, std::size_t min_features) {
  std::vector<Triplet> entries;
  std::vector<double> labels;
  std::size_t cols = min_features;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    double label = 0.0;
    if (!parse_number(tok, label)) throw ParseError("bad label '" + tok + "'", lineno);
    const std::size_t row = labels.size();
    labels.push_back(label);
    seen.clear();
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected index:value, got '" + tok + "'", lineno);
      std::size_t index = 0;
      double value = 0.0;
      if (!parse_number(std::string_view(tok).substr(0, colon), index) || index == 0) {
        throw ParseError("bad feature index in '" + tok + "'", lineno);
      }
      if (!parse_number(std::string_view(tok).substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError("bad feature value in '" + tok + "'", lineno);
      }
      if (!seen.insert(index).second) {
        throw ParseError("duplicate feature index " + std::to_string(index), lineno);
      }
      cols = std::max(cols, index);
      entries.push_back({row, index - 1, value});
    }
  }
  LabeledData data;
  data.examples = SparseMatrix::from_triplets(labels.size(), cols, std::move(entries));
  data.labels = std::move(labels);
  return data;
}

LabeledData read_libsvm(const std::string& path, std::size_t min_features) {
  auto in = open_in(path);
  return read_libsvm(in, min_features);
}

void write_libsvm(std::ostream& out, const LabeledData& data) {
  const auto& X = data.examples;
  if (data.labels.size() != X.rows()) throw Error("label count does not match example count");
  for (std::size_t r = 0; r < X.rows(); ++r) {
    out << format_double(data.labels[r]);
    const auto row = X.row(r);
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      out << ' ' << row.index[k] + 1 << ':' << format_double(row.value[k]);
    }
    out << '\n';
  }
  if (!out) throw Error("write failed");
}

void write_libsvm(const std::string& path, const LabeledData& data) {
  auto out = open_out(path);
  write_libsvm(out, data);
}

SamplingLaw parse_law(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  // file names may contain ':' so only the leading fields are split
  const auto kind_end = text.find(':');
  const std::string kind = text.substr(0, kind_end);
  if (kind == "nu" || kind == "du") {
    if (kind_end == std::string::npos) throw ParseError("law '" + text + "' needs a file");
    const std::string path = text.substr(kind_end + 1);
    auto in = open_in(path);
    if (kind == "du") {
      std::vector<double> q;
      Tokens tok(in);
      std::string s;
      while (tok.next(s)) {
        double v = 0.0;
        if (!parse_number(s, v)) throw ParseError("bad probability '" + s + "' in " + path, tok.line());
        q.push_back(v);
      }
      return SamplingLaw::doubly_uniform(std::move(q));
    }
    std::vector<std::vector<std::size_t>> cells;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string s;
      std::vector<std::size_t> cell;
      while (ls >> s) {
        std::size_t v = 0;
        if (!parse_number(s, v)) throw ParseError("bad block index '" + s + "' in " + path, lineno);
        cell.push_back(v);
      }
      if (!cell.empty()) cells.push_back(std::move(cell));
    }
    return SamplingLaw::nonoverlapping(std::move(cells));
  }
  while (start <= text.size()) {
    const auto end = text.find(':', start);
    parts.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  auto arity = [&](std::size_t k) {
    if (parts.size() != k) throw ParseError("law '" + text + "' expects " + std::to_string(k - 1) + " parameter(s)");
  };
  auto integer = [&](const std::string& s) {
    std::size_t v = 0;
    if (!parse_number(s, v)) throw ParseError("bad integer '" + s + "' in law '" + text + "'");
    return v;
  };
  if (kind == "serial") {
    arity(1);
    return SamplingLaw::serial();
  }
  if (kind == "full") {
    arity(1);
    return SamplingLaw::fully_parallel();
  }
  if (kind == "nice") {
    arity(2);
    return SamplingLaw::nice(integer(parts[1]));
  }
  if (kind == "indep") {
    arity(2);
    return SamplingLaw::independent(integer(parts[1]));
  }
  if (kind == "binom") {
    arity(3);
    double p = 0.0;
    if (!parse_number(parts[2], p)) throw ParseError("bad probability in law '" + text + "'");
    return SamplingLaw::binomial(integer(parts[1]), p);
  }
  throw ParseError("unknown law '" + text + "'");
}

}  // namespace pcdm
