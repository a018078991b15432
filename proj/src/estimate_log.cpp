#include "carbontag/estimate_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "carbontag/error.hpp"

namespace carbontag {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSegmentPrefix = "estimates-";
constexpr std::string_view kSegmentSuffix = ".ndjson";

std::optional<std::uint32_t> segment_number(const fs::path& p) {
    const auto name = p.filename().string();
    if (!name.starts_with(kSegmentPrefix) || !name.ends_with(kSegmentSuffix)) return std::nullopt;
    auto digits = std::string_view(name).substr(kSegmentPrefix.size(),
                                                name.size() - kSegmentPrefix.size() - kSegmentSuffix.size());
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    return static_cast<std::uint32_t>(std::stoul(std::string(digits)));
}

fs::path segment_path(const fs::path& dir, std::uint32_t index) {
    char name[64];
    std::snprintf(name, sizeof name, "estimates-%06u.ndjson", index);
    return dir / name;
}

void write_all(int fd, const char* data, std::size_t size) {
    while (size > 0) {
        ssize_t w = ::write(fd, data, size);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("estimate log write failed: ") + std::strerror(errno));
        }
        data += w;
        size -= static_cast<std::size_t>(w);
    }
}

}  // namespace

EstimateLog::EstimateLog(fs::path dir, std::size_t rotate_bytes, bool sync_each)
    : dir_(std::move(dir)), rotate_bytes_(rotate_bytes), sync_each_(sync_each) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create log directory " + dir_.string() + ": " + ec.message());
    auto existing = segments(dir_);
    std::uint32_t last = 1;
    if (!existing.empty()) last = *segment_number(existing.back());
    open_segment(last);
}

EstimateLog::~EstimateLog() {
    if (fd_ >= 0) ::close(fd_);
}

void EstimateLog::open_segment(std::uint32_t index) {
    if (fd_ >= 0) ::close(fd_);
    const auto path = segment_path(dir_, index);
    fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open estimate log " + path.string() + ": " + std::strerror(errno));
    segment_ = index;
    segment_bytes_ = static_cast<std::size_t>(::lseek(fd_, 0, SEEK_END));
    if (segment_bytes_ > 0) {
        // terminate a record torn by a crash so the next one starts on its own line
        char last = 0;
        int rfd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
        if (rfd >= 0) {
            if (::pread(rfd, &last, 1, static_cast<off_t>(segment_bytes_ - 1)) == 1 && last != '\n') {
                write_all(fd_, "\n", 1);
                ++segment_bytes_;
            }
            ::close(rfd);
        }
    }
}

void EstimateLog::append(std::string_view line) {
    std::lock_guard lock(mu_);
    if (segment_bytes_ > 0 && segment_bytes_ + line.size() + 1 > rotate_bytes_) open_segment(segment_ + 1);
    buf_.assign(line);
    buf_ += '\n';
    write_all(fd_, buf_.data(), buf_.size());
    if (sync_each_) ::fdatasync(fd_);
    segment_bytes_ += buf_.size();
    ++appended_;
}

std::uint64_t EstimateLog::appended() const {
    std::lock_guard lock(mu_);
    return appended_;
}

std::vector<fs::path> EstimateLog::segments(const fs::path& dir) {
    std::vector<std::pair<std::uint32_t, fs::path>> found;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (auto n = segment_number(entry.path())) found.emplace_back(*n, entry.path());
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    for (auto& [n, p] : found) out.push_back(std::move(p));
    return out;
}

std::uint64_t GradeHistogram::total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::string StatsSnapshot::to_json_text() const {
    using Json = nlohmann::json;
    auto hist = [](const GradeHistogram& h) {
        Json j = Json::object();
        for (std::size_t g = 0; g < kGradeCount; ++g) j[std::string(1, grade_letter(static_cast<Grade>(g)))] = h.counts[g];
        return j;
    };
    Json versions = Json::object();
    for (const auto& [v, h] : by_model_version) versions[v] = {{"grades", hist(h)}, {"total", h.total()}};
    return Json{{"grades", hist(grades)},
                {"total", total()},
                {"by_model_version", versions},
                {"corrupt_lines", corrupt_lines}}
        .dump();
}

StatsSnapshot scan_estimate_log(const fs::path& dir) {
    StatsSnapshot out;
    for (const auto& path : EstimateLog::segments(dir)) {
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::size_t pos = 0;
        while (pos < content.size()) {
            auto nl = content.find('\n', pos);
            if (nl == std::string::npos) break;  // record still being written
            std::string_view line(content.data() + pos, nl - pos);
            pos = nl + 1;
            if (line.empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                const auto& resp = j.at("response");
                auto grade = parse_grade(resp.at("label").get<std::string>());
                if (!grade) throw std::runtime_error("bad label");
                const auto g = static_cast<std::size_t>(*grade);
                ++out.grades.counts[g];
                ++out.by_model_version[resp.at("model_version").get<std::string>()].counts[g];
            } catch (const std::exception& e) {
                ++out.corrupt_lines;
                spdlog::warn("skipping corrupt record in {}: {}", path.filename().string(), e.what());
            }
        }
    }
    return out;
}

}  // namespace carbontag
