#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "carbontag/energy_metrics.hpp"

namespace carbontag {

/// Append-only newline-delimited record log split into numbered segment
/// files (estimates-000001.ndjson, ...). One writer at a time; each record is
/// handed to the kernel with a single write before append() returns.
class EstimateLog {
public:
    EstimateLog(std::filesystem::path dir, std::size_t rotate_bytes = 64u << 20, bool sync_each = false);
    ~EstimateLog();

    EstimateLog(const EstimateLog&) = delete;
    EstimateLog& operator=(const EstimateLog&) = delete;

    /// `line` must not contain a newline; one is appended.
    void append(std::string_view line);

    const std::filesystem::path& dir() const { return dir_; }
    std::uint64_t appended() const;

    static std::vector<std::filesystem::path> segments(const std::filesystem::path& dir);

private:
    void open_segment(std::uint32_t index);

    std::filesystem::path dir_;
    std::size_t rotate_bytes_;
    bool sync_each_;
    mutable std::mutex mu_;
    int fd_ = -1;
    std::uint32_t segment_ = 0;
    std::size_t segment_bytes_ = 0;
    std::uint64_t appended_ = 0;
    std::string buf_;
};

struct GradeHistogram {
    std::array<std::uint64_t, kGradeCount> counts{};
    std::uint64_t total() const;
};

struct StatsSnapshot {
    GradeHistogram grades;
    std::map<std::string, GradeHistogram> by_model_version;
    std::uint64_t corrupt_lines = 0;

    std::uint64_t total() const { return grades.total(); }
    std::string to_json_text() const;
};

/// Counts persisted records per grade. Unparsable complete lines are skipped
/// and counted; an unterminated last line (write in progress) is ignored.
StatsSnapshot scan_estimate_log(const std::filesystem::path& dir);

}  // namespace carbontag
