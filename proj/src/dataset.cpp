#include "carbontag/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "carbontag/checksum.hpp"
#include "carbontag/energy_metrics.hpp"
#include "carbontag/error.hpp"

namespace carbontag {

namespace {

constexpr std::size_t kIdColumns = 5;  // ad_id, device_id, sample_index, baseline, rendering

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || cell.empty() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                             "' in column " + column,
                         line_no);
    }
    return v;
}

std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace

const char* to_string(Provenance p) { return p == Provenance::synthetic ? "synthetic" : "ingested"; }

Dataset::Dataset(std::vector<LabeledSample> samples, Provenance provenance,
                 std::optional<std::uint64_t> seed)
    : samples_(std::move(samples)), provenance_(provenance), seed_(seed) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : samples_) {
        if (!seen.emplace(s.ad_id, s.device_id).second)
            throw DomainError("duplicate sample for ad '" + s.ad_id + "' on device '" + s.device_id + "'");
    }
}

std::vector<double> Dataset::targets() const {
    std::vector<double> y;
    y.reserve(samples_.size());
    for (const auto& s : samples_) y.push_back(s.normalized_energy);
    return y;
}

std::vector<double> Dataset::column(std::size_t param) const {
    std::vector<double> x;
    x.reserve(samples_.size());
    for (const auto& s : samples_) x.push_back(s.metrics.at(param));
    return x;
}

std::vector<std::string> Dataset::devices() const {
    std::vector<std::string> out;
    for (const auto& s : samples_) {
        if (std::find(out.begin(), out.end(), s.device_id) == out.end()) out.push_back(s.device_id);
    }
    return out;
}

std::string Dataset::fingerprint() const {
    std::ostringstream os;
    write_dataset_csv(os, *this);
    return fnv1a_128_hex(os.str());
}

std::vector<std::string> measurement_csv_header() {
    std::vector<std::string> h{"ad_id", "device_id", "sample_index", "baseline_energy",
                               "ad_rendering_energy"};
    for (const auto& p : parameter_registry()) h.emplace_back(p.name);
    return h;
}

std::vector<RawRow> parse_measurement_csv(std::istream& in, CountPolicy counts) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        have_header = true;
        break;
    }
    if (!have_header) throw SchemaError("empty measurement file");

    const auto header_cells = split_csv_line(line, line_no);
    const auto expected = measurement_csv_header();
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header_cells.size(); ++i) {
        const auto& name = header_cells[i];
        if (std::find(expected.begin(), expected.end(), name) == expected.end())
            throw SchemaError("unknown column: " + name, name);
        if (!position.emplace(name, i).second) throw SchemaError("duplicate column: " + name, name);
    }
    std::vector<std::size_t> source(expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        auto it = position.find(expected[k]);
        if (it == position.end()) throw SchemaError("missing column: " + expected[k], expected[k]);
        source[k] = it->second;
    }

    const auto registry = parameter_registry();
    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line, line_no);
        if (cells.size() != header_cells.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header_cells.size()) + " fields, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        RawRow row;
        row.line = line_no;
        row.ad_id = cells[source[0]];
        row.device_id = cells[source[1]];
        double idx = parse_number(cells[source[2]], "sample_index", line_no);
        if (idx != std::floor(idx) || idx < 1 || idx > 5)
            throw ParseError("line " + std::to_string(line_no) + ": sample_index must be an integer in 1..5",
                             line_no);
        row.sample_index = static_cast<int>(idx);
        row.baseline_energy = parse_number(cells[source[3]], "baseline_energy", line_no);
        row.ad_rendering_energy = parse_number(cells[source[4]], "ad_rendering_energy", line_no);
        if (row.ad_rendering_energy < 0)
            throw ParseError("line " + std::to_string(line_no) + ": ad_rendering_energy is negative", line_no);
        for (std::size_t p = 0; p < kParamCount; ++p) {
            const std::string col(registry[p].name);
            double v = parse_number(cells[source[kIdColumns + p]], col, line_no);
            if (v < 0)
                throw ParseError("line " + std::to_string(line_no) + ": negative value in " + col, line_no);
            const double step = counts == CountPolicy::integral ? v : 2.0 * v;
            if (registry[p].kind == ParamKind::count && step != std::floor(step))
                throw ParseError("line " + std::to_string(line_no) + ": non-integer count in " + col, line_no);
            row.metrics.set(p, v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RawRow> read_measurement_csv(const std::string& path, CountPolicy counts) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    return parse_measurement_csv(in, counts);
}

void write_measurement_csv(std::ostream& out, std::span<const RawRow> rows) {
    const auto header = measurement_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) {
        out << quote_if_needed(r.ad_id) << ',' << quote_if_needed(r.device_id) << ',' << r.sample_index
            << ',' << format_number(r.baseline_energy) << ',' << format_number(r.ad_rendering_energy);
        for (std::size_t p = 0; p < kParamCount; ++p) out << ',' << format_number(r.metrics.at(p));
        out << '\n';
    }
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
    std::vector<RawRow> rows;
    rows.reserve(dataset.size());
    for (const auto& s : dataset.samples()) {
        RawRow r;
        r.ad_id = s.ad_id;
        r.device_id = s.device_id;
        r.sample_index = 1;
        r.baseline_energy = 1.0;
        r.ad_rendering_energy = 1.0 + s.normalized_energy;
        r.metrics = s.metrics;
        rows.push_back(std::move(r));
    }
    write_measurement_csv(out, rows);
}

void write_dataset_csv(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset file: " + path);
    write_dataset_csv(out, dataset);
}

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty sample");
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double upper = values[mid];
    if (n % 2 == 1) return upper;
    double lower = *std::max_element(values.begin(), values.begin() + mid);
    return lower + (upper - lower) / 2.0;
}

Dataset aggregate_samples(std::span<const RawRow> rows, Provenance provenance) {
    std::map<std::pair<std::string, std::string>, std::size_t> group_of;
    std::vector<std::vector<const RawRow*>> groups;
    for (const auto& r : rows) {
        auto [it, inserted] = group_of.emplace(std::make_pair(r.ad_id, r.device_id), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(&r);
    }

    std::vector<LabeledSample> samples;
    samples.reserve(groups.size());
    std::vector<double> buf;
    for (const auto& g : groups) {
        std::set<int> indices;
        for (const RawRow* r : g) {
            if (!indices.insert(r->sample_index).second)
                throw DomainError("ad '" + r->ad_id + "' on device '" + r->device_id +
                                  "' repeats sample_index " + std::to_string(r->sample_index));
        }
        LabeledSample s;
        s.ad_id = g.front()->ad_id;
        s.device_id = g.front()->device_id;

        buf.clear();
        for (const RawRow* r : g) buf.push_back(normalized_ad_energy(r->ad_rendering_energy, r->baseline_energy));
        s.normalized_energy = median(buf);

        for (std::size_t p = 0; p < kParamCount; ++p) {
            buf.clear();
            for (const RawRow* r : g) buf.push_back(r->metrics.at(p));
            s.metrics.set(p, median(buf));
        }
        samples.push_back(std::move(s));
    }
    return Dataset(std::move(samples), provenance);
}

Dataset load_dataset(const std::string& path) {
    auto rows = read_measurement_csv(path, CountPolicy::allow_half);
    if (rows.empty()) throw SchemaError("dataset file has no data rows: " + path);
    return aggregate_samples(rows);
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DomainError("train fraction must lie in (0, 1)");
    const std::size_t n = dataset.size();
    if (n < 2) throw DomainError("split needs at least 2 samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit bounded draw so the permutation does not
    // depend on the standard library's shuffle.
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uint64_t bound = i + 1;
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw;
        do draw = rng(); while (draw >= limit);
        std::swap(order[i], order[draw % bound]);
    }

    const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * train_fraction - 1e-9));
    std::vector<LabeledSample> train, test;
    for (std::size_t k = 0; k < n; ++k) {
        (k < n_train ? train : test).push_back(dataset.samples()[order[k]]);
    }
    return {Dataset(std::move(train), dataset.provenance(), dataset.seed()),
            Dataset(std::move(test), dataset.provenance(), dataset.seed())};
}

}  // namespace carbontag
