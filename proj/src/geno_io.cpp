#include "resgene/geno_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <ostream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace resgene::geno {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string where(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

std::optional<std::int8_t> try_encode_base(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A':
    case 'T':
      return 0;
    case 'G':
    case 'C':
      return 2;
    case 'N':
      return -1;
    case 'R':
    case 'Y':
    case 'S':
    case 'W':
    case 'K':
    case 'M':
      return 1;
    default:
      return std::nullopt;
  }
}

std::int8_t encode_base(char c, std::size_t row, std::size_t col) {
  if (auto code = try_encode_base(c)) return *code;
  throw ParseError("illegal nucleotide '" + std::string(1, c) + "' at row " +
                   std::to_string(row) + ", column " + std::to_string(col));
}

RawGenotypeTable parse_genotypes(std::istream& in, const FormatOptions& opts,
                                 const std::string& source) {
  RawGenotypeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(source + ": missing header row");
  const auto header = split(line, opts.delimiter);
  if (header.size() < 2) {
    throw ParseError(where(source, line_no) +
                     ": header needs a variety column and at least one SNP");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    table.snp_ids.emplace_back(header[j]);
  }
  const std::size_t d = table.snp_ids.size();

  std::unordered_set<std::string> seen;
  while (read_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, opts.delimiter);
    if (fields.size() != d + 1) {
      throw ParseError(where(source, line_no) + ": ragged row with " +
                       std::to_string(fields.size() - 1) +
                       " genotype cells, expected " + std::to_string(d));
    }
    std::string id(fields[0]);
    if (!seen.insert(id).second) {
      throw ParseError(where(source, line_no) + ": duplicate variety id '" +
                       id + "'");
    }
    for (std::size_t j = 1; j <= d; ++j) {
      const auto cell = fields[j];
      if (cell.size() != 1 || !try_encode_base(cell[0])) {
        throw ParseError(where(source, line_no) + ": illegal genotype '" +
                         std::string(cell) + "' in column " +
                         std::to_string(j + 1) + " (SNP " +
                         table.snp_ids[j - 1] + ")");
      }
      table.cells.push_back(
          static_cast<char>(std::toupper(static_cast<unsigned char>(cell[0]))));
    }
    table.variety_ids.push_back(std::move(id));
  }
  return table;
}

RawGenotypeTable load_genotypes(const std::filesystem::path& path,
                                const FormatOptions& opts) {
  auto in = open_or_throw(path);
  return parse_genotypes(in, opts, path.string());
}

TraitTable parse_phenotypes(std::istream& in, const FormatOptions& opts,
                            const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(source + ": missing header row");
  const auto header = split(line, opts.delimiter);
  if (header.size() < 2) {
    throw ParseError(where(source, line_no) +
                     ": header needs a variety column and at least one trait");
  }
  TraitTable traits(header.size() - 1);
  for (std::size_t j = 1; j < header.size(); ++j) {
    traits[j - 1].name = std::string(header[j]);
  }

  std::unordered_set<std::string> seen;
  while (read_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, opts.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(where(source, line_no) + ": ragged row with " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    std::string id(fields[0]);
    if (!seen.insert(id).second) {
      throw ParseError(where(source, line_no) + ": duplicate variety id '" +
                       id + "'");
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      auto& col = traits[j - 1];
      col.variety_ids.push_back(id);
      const auto cell = fields[j];
      if (cell == "NA") {
        col.values.emplace_back(std::nullopt);
        continue;
      }
      double v = 0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ParseError(where(source, line_no) + ": non-numeric phenotype '" +
                         std::string(cell) + "' for trait " + col.name);
      }
      col.values.emplace_back(v);
    }
  }
  return traits;
}

TraitTable load_phenotypes(const std::filesystem::path& path,
                           const FormatOptions& opts) {
  auto in = open_or_throw(path);
  return parse_phenotypes(in, opts, path.string());
}

GenotypeDataset build_dataset(const RawGenotypeTable& raw,
                              const TraitTable& traits) {
  GenotypeDataset ds;
  ds.variety_ids = raw.variety_ids;
  ds.d = raw.d();
  ds.encoded.resize(raw.cells.size());
  for (std::size_t i = 0; i < raw.n(); ++i) {
    for (std::size_t j = 0; j < raw.d(); ++j) {
      ds.encoded[i * raw.d() + j] = encode_base(raw.at(i, j), i + 1, j + 1);
    }
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.variety_ids.size(); ++i) {
    index.emplace(ds.variety_ids[i], i);
  }

  std::size_t joined = 0;
  for (const auto& col : traits) {
    Trait trait;
    trait.values.assign(ds.n(), 0.0);
    trait.present.assign(ds.n(), false);
    std::size_t observed = 0;
    for (std::size_t r = 0; r < col.variety_ids.size(); ++r) {
      const auto it = index.find(col.variety_ids[r]);
      if (it == index.end()) {
        throw DatasetError("phenotype variety '" + col.variety_ids[r] +
                           "' has no genotype row");
      }
      if (col.values[r]) {
        trait.values[it->second] = *col.values[r];
        trait.present[it->second] = true;
        ++observed;
      }
    }
    joined = std::max(joined, col.variety_ids.size());
    if (observed > 0) ds.traits.emplace(col.name, std::move(trait));
  }
  if (ds.n() == 0 || joined == 0) {
    throw DatasetError("genotype and phenotype tables share no varieties");
  }
  return ds;
}

TraitView trait_view(const GenotypeDataset& ds, const std::string& trait) {
  const auto it = ds.traits.find(trait);
  if (it == ds.traits.end()) {
    throw DatasetError("trait '" + trait + "' not present in dataset");
  }
  TraitView view;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (it->second.present[i]) {
      view.rows.push_back(i);
      view.targets.push_back(it->second.values[i]);
    }
  }
  return view;
}

void write_genotypes(std::ostream& out, const RawGenotypeTable& table,
                     const FormatOptions& opts) {
  out << "variety";
  for (const auto& id : table.snp_ids) out << opts.delimiter << id;
  out << '\n';
  for (std::size_t i = 0; i < table.n(); ++i) {
    out << table.variety_ids[i];
    for (std::size_t j = 0; j < table.d(); ++j) {
      out << opts.delimiter << table.at(i, j);
    }
    out << '\n';
  }
}

void write_phenotypes(std::ostream& out, const TraitTable& traits,
                      const FormatOptions& opts) {
  if (traits.empty()) throw DatasetError("no trait columns to write");
  const auto& ids = traits.front().variety_ids;
  for (const auto& col : traits) {
    if (col.variety_ids != ids || col.values.size() != ids.size()) {
      throw DatasetError("trait columns disagree on variety order");
    }
  }
  out << "variety";
  for (const auto& col : traits) out << opts.delimiter << col.name;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (const auto& col : traits) {
      out << opts.delimiter;
      if (!col.values[i]) {
        out << "NA";
        continue;
      }
      const auto res = std::to_chars(buf, buf + sizeof(buf), *col.values[i]);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace resgene::geno
