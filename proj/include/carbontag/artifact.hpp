#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "carbontag/energy_metrics.hpp"
#include "carbontag/regression.hpp"

namespace carbontag {

/// Artifact schema version written by export_artifact.
inline constexpr std::string_view kArtifactFormat = "v1";
inline constexpr std::size_t kArtifactByteBudget = 10240;

/// Canonical payload text: sorted keys, no whitespace, floats with 17
/// significant digits.
std::string canonical_payload(const LinearModel& model, const LabelScale& bins,
                              std::string_view format = kArtifactFormat);

/// Wraps a payload as {"checksum":"<fnv1a-128 of payload>","payload":<payload>}.
std::string seal_payload(std::string_view payload);

/// Serialized artifact. Throws SizeBudgetError above kArtifactByteBudget bytes.
std::string export_artifact(const LinearModel& model, const LabelScale& bins = LabelScale::standard());

struct ImportedArtifact {
    LinearModel model;
    LabelScale bins;
    std::string checksum;
};

/// Verifies the checksum over the raw payload bytes, then the format version.
/// Throws IntegrityError or VersionError.
ImportedArtifact import_artifact(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace carbontag
