#include "dsmm/pairdata/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <vector>

#include "dsmm/numerics/errors.hpp"

namespace dsmm::pairs {

namespace {

constexpr std::string_view kMagic = "dsmm-pairs v1";

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& what) {
    Int value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    require(ec == std::errc() && ptr == text.data() + text.size(),
            "dataset: cannot parse " + what + " from '" + std::string(text) + "'");
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    require(ec == std::errc() && ptr == text.data() + text.size(),
            "cannot parse a number from '" + std::string(text) + "'");
    return value;
}

std::string format_header(const GeneratorMeta& meta, std::size_t families, std::size_t dim) {
    return std::string(kMagic) + ", N=" + std::to_string(families) + ", d=" + std::to_string(dim) +
           ", mode=" + std::string(to_string(meta.config.mode)) + ", rho=" + format_double(meta.config.rho) +
           ", sigma=" + format_double(meta.config.sigma) + ", seed=" + std::to_string(meta.seed);
}

GeneratorMeta parse_header(const std::string& line) {
    const auto fields = split(trim(line), ',');
    require(!fields.empty() && trim(fields[0]) == kMagic, "dataset: missing '" + std::string(kMagic) + "' header");
    std::map<std::string, std::string, std::less<>> kv;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const std::string_view field = trim(fields[i]);
        const std::size_t eq = field.find('=');
        require(eq != std::string_view::npos, "dataset header: malformed field '" + std::string(field) + "'");
        kv.emplace(std::string(field.substr(0, eq)), std::string(field.substr(eq + 1)));
    }
    for (const char* key : {"N", "d", "mode", "rho", "sigma", "seed"}) {
        require(kv.count(key) == 1, std::string("dataset header: missing field ") + key);
    }
    require(kv.size() == 6, "dataset header: unexpected extra fields");
    GeneratorMeta meta;
    meta.config.families = parse_int<std::size_t>(kv["N"], "N");
    meta.config.dim = parse_int<std::size_t>(kv["d"], "d");
    meta.config.mode = parse_mode(kv["mode"]);
    meta.config.rho = parse_double(kv["rho"]);
    meta.config.sigma = parse_double(kv["sigma"]);
    meta.seed = parse_int<std::uint64_t>(kv["seed"], "seed");
    return meta;
}

void write_dataset(const PairDataset& dataset, std::ostream& out) {
    require(dataset.generator().has_value(), "dataset: only generator-backed datasets carry a complete header");
    out << format_header(*dataset.generator(), dataset.families(), dataset.dim()) << '\n';
    for (const Entity& e : dataset.entities()) {
        out << e.family_id << ',' << to_string(e.role);
        for (double f : e.features) {
            out << ',' << format_double(f);
        }
        out << '\n';
    }
}

PairDataset read_dataset(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "dataset: empty input");
    const GeneratorMeta meta = parse_header(line);
    std::vector<Entity> entities;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(trim(line), ',');
        require(cells.size() == 2 + meta.config.dim, "dataset line " + std::to_string(line_no) + ": expected " +
                                                         std::to_string(2 + meta.config.dim) + " fields, got " +
                                                         std::to_string(cells.size()));
        Entity e;
        e.family_id = parse_int<std::int64_t>(cells[0], "family_id");
        e.role = parse_role(cells[1]);
        e.features.reserve(meta.config.dim);
        for (std::size_t i = 2; i < cells.size(); ++i) {
            e.features.push_back(parse_double(cells[i]));
        }
        entities.push_back(std::move(e));
    }
    PairDataset dataset = PairDataset::from_entities(entities, meta);
    require(dataset.families() == meta.config.families,
            "dataset: header says N=" + std::to_string(meta.config.families) + " but rows define " +
                std::to_string(dataset.families()) + " families");
    return dataset;
}

void save_dataset(const PairDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_dataset(dataset, out);
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

PairDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open dataset " + path.string());
    }
    try {
        return read_dataset(in);
    } catch (const ContractError& e) {
        throw ContractError(path.string() + ": " + e.what());
    }
}

}  // namespace dsmm::pairs
