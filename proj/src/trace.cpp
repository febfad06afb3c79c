#include "rssipred/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "rssipred/errors.hpp"

namespace rssipred {

double nominal_time(std::uint64_t seq, double nominal_interval) {
    return std::round(static_cast<double>(seq) * nominal_interval * 1e6) / 1e6;
}

Trace::Trace(std::vector<RssiSample> samples, double nominal_interval, Meta meta)
    : samples_(std::move(samples)), interval_(nominal_interval), meta_(std::move(meta)) {
    if (!(nominal_interval > 0.0) || !std::isfinite(nominal_interval)) {
        throw ValidationError("nominal interval must be positive");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.rssi)) {
            throw ValidationError(fmt::format("non-finite rssi at seq {}", s.seq));
        }
        if (!std::isfinite(s.t) || s.t < 0.0) {
            throw ValidationError(fmt::format("invalid timestamp at seq {}", s.seq));
        }
        if (i > 0) {
            const auto& prev = samples_[i - 1];
            if (s.seq <= prev.seq) {
                throw ValidationError(fmt::format("samples not strictly ordered by seq at seq {}", s.seq));
            }
            if (s.t <= prev.t) {
                throw ValidationError(fmt::format("timestamps not strictly increasing at seq {}", s.seq));
            }
        }
    }
}

double Trace::loss_ratio() const noexcept {
    if (samples_.empty()) return 0.0;
    const double expected = static_cast<double>(samples_.back().seq - samples_.front().seq) + 1.0;
    return 1.0 - static_cast<double>(samples_.size()) / expected;
}

double Trace::span_seconds() const noexcept {
    if (samples_.size() < 2) return 0.0;
    return samples_.back().t - samples_.front().t;
}

std::vector<double> Trace::rssi_values() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.rssi);
    return out;
}

DerivativeSeries derivative_series(const Trace& trace) {
    if (trace.size() < 2) {
        throw ValidationError("derivative series needs at least 2 samples");
    }
    DerivativeSeries out;
    out.points.reserve(trace.size() - 1);
    const auto samples = trace.samples();
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double dt = samples[k].t - samples[k - 1].t;
        out.points.push_back({samples[k].seq, samples[k].t, (samples[k].rssi - samples[k - 1].rssi) / dt});
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

template <typename T>
bool parse_number(std::string_view cell, T& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

struct Columns {
    std::optional<std::size_t> seq, t, rssi, tx;
};

Columns parse_header(std::string_view line) {
    Columns cols;
    const auto cells = split(line);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "seq") cols.seq = i;
        else if (cells[i] == "t_s") cols.t = i;
        else if (cells[i] == "rssi_dbm") cols.rssi = i;
        else if (cells[i] == "tx_power_dbm") cols.tx = i;
    }
    if (!cols.seq || !cols.rssi) {
        throw ParseError(1, "header must declare columns 'seq' and 'rssi_dbm'");
    }
    return cols;
}

}  // namespace

IngestResult ingest_csv(std::istream& in, double nominal_interval) {
    std::string line;
    std::size_t line_no = 0;

    // Skip leading blank lines; the first non-blank line is the header.
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw ValidationError("empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const Columns cols = parse_header(line);

    IngestResult result;
    std::vector<RssiSample> rows;
    std::unordered_map<std::uint64_t, std::size_t> by_seq;
    std::size_t data_rows = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++data_rows;
        const auto cells = split(line);
        auto cell = [&](std::optional<std::size_t> idx) -> std::string_view {
            if (!idx) return {};
            if (*idx >= cells.size()) throw ParseError(line_no, "missing column");
            return cells[*idx];
        };

        RssiSample s;
        if (!parse_number(cell(cols.seq), s.seq)) {
            throw ParseError(line_no, fmt::format("bad seq '{}'", cell(cols.seq)));
        }
        if (!parse_number(cell(cols.rssi), s.rssi)) {
            throw ParseError(line_no, fmt::format("bad rssi_dbm '{}'", cell(cols.rssi)));
        }
        if (cols.t) {
            if (!parse_number(cell(cols.t), s.t) || !std::isfinite(s.t) || s.t < 0.0) {
                throw ParseError(line_no, fmt::format("bad t_s '{}'", cell(cols.t)));
            }
        } else {
            s.t = nominal_time(s.seq, nominal_interval);
        }
        if (cols.tx && !cell(cols.tx).empty()) {
            double tx = 0.0;
            if (!parse_number(cell(cols.tx), tx) || !std::isfinite(tx)) {
                throw ParseError(line_no, fmt::format("bad tx_power_dbm '{}'", cell(cols.tx)));
            }
            s.tx_power = tx;
        }

        if (!std::isfinite(s.rssi) || s.rssi < kMinRssiDbm || s.rssi > kMaxRssiDbm) {
            ++result.rejected;
            continue;
        }
        if (auto it = by_seq.find(s.seq); it != by_seq.end()) {
            rows[it->second] = s;
            ++result.duplicates;
        } else {
            by_seq.emplace(s.seq, rows.size());
            rows.push_back(s);
        }
    }
    if (data_rows == 0) throw ValidationError("empty file: no data rows");

    std::sort(rows.begin(), rows.end(), [](const RssiSample& a, const RssiSample& b) { return a.seq < b.seq; });
    result.trace = Trace(std::move(rows), nominal_interval);
    return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, double nominal_interval) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return ingest_csv(in, nominal_interval);
}

void export_csv(const Trace& trace, std::ostream& out) {
    out << "seq,t_s,rssi_dbm,tx_power_dbm\n";
    for (const auto& s : trace.samples()) {
        out << fmt::format("{},{:.6f},{:.2f},", s.seq, s.t, s.rssi);
        if (s.tx_power) out << fmt::format("{:.2f}", *s.tx_power);
        out << '\n';
    }
}

void export_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    export_csv(trace, out);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace rssipred
