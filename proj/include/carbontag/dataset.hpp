#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "carbontag/params.hpp"

namespace carbontag {

/// One lab sample: the energy pair for a single run plus the parameters
/// observed during that run.
struct RawRow {
    std::string ad_id;
    std::string device_id;
    int sample_index = 1;
    double baseline_energy = 0.0;
    double ad_rendering_energy = 0.0;
    AdRenderMetrics metrics = AdRenderMetrics::zeros();
    std::size_t line = 0;  // 1-based source line, 0 when not parsed from a file
};

struct LabeledSample {
    std::string ad_id;
    std::string device_id;
    AdRenderMetrics metrics;
    double normalized_energy = 0.0;
};

enum class Provenance { ingested, synthetic };

const char* to_string(Provenance p);

/// Immutable collection of per-(ad, device) samples.
class Dataset {
public:
    Dataset() = default;
    /// Throws DomainError on duplicate (ad_id, device_id) pairs.
    Dataset(std::vector<LabeledSample> samples, Provenance provenance,
            std::optional<std::uint64_t> seed = std::nullopt);

    std::span<const LabeledSample> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    Provenance provenance() const { return provenance_; }
    std::optional<std::uint64_t> seed() const { return seed_; }

    std::vector<double> targets() const;
    std::vector<double> column(std::size_t param) const;
    /// Device ids in order of first appearance.
    std::vector<std::string> devices() const;

    /// Content digest (hex) of the canonical CSV serialization.
    std::string fingerprint() const;

private:
    std::vector<LabeledSample> samples_;
    Provenance provenance_ = Provenance::ingested;
    std::optional<std::uint64_t> seed_;
};

/// Column order of the measurement CSV: identity and energy columns followed
/// by the parameter registry.
std::vector<std::string> measurement_csv_header();

/// Raw measurements carry whole counts. Aggregated files may also hold
/// half counts, the median of an even number of samples.
enum class CountPolicy { integral, allow_half };

std::vector<RawRow> parse_measurement_csv(std::istream& in, CountPolicy counts = CountPolicy::integral);
std::vector<RawRow> read_measurement_csv(const std::string& path, CountPolicy counts = CountPolicy::integral);

void write_measurement_csv(std::ostream& out, std::span<const RawRow> rows);

/// Writes an aggregated dataset as one row per sample, encoding the
/// normalized energy as baseline 1 and rendering 1 + nEad.
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
void write_dataset_csv(const std::string& path, const Dataset& dataset);

/// Median with the even-count rule (mean of the two central values).
double median(std::vector<double> values);

/// Collapses each (ad_id, device_id) group to per-field medians. The
/// normalized energy is computed per sample first, then its median taken.
Dataset aggregate_samples(std::span<const RawRow> rows, Provenance provenance = Provenance::ingested);

/// Reads a measurement or aggregated CSV and aggregates it.
Dataset load_dataset(const std::string& path);

/// Seeded shuffle, then the first ceil(n * train_fraction) samples train.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace carbontag
