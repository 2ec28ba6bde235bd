// Copyright 2026 The semrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "semrl/error.hpp"
#include "semrl/format.hpp"
#include "semrl/semantic_model.hpp"

namespace semrl {

struct Record {
    std::string source;
    std::string timestamp;
    PropertyValue value;
};

/// Raw time series: one record per (source, timestamp, value) row. Numerical
/// values may be NaN to mark a missing measurement.
struct TimeSeriesDataset {
    std::vector<Record> records;
    std::set<std::string> sources;
    std::map<std::string, ValueKind> kinds;

    ValueKind kind_of(const std::string& source) const {
        auto it = kinds.find(source);
        return it == kinds.end() ? ValueKind::numerical : it->second;
    }
};

/// Per-source ingestion settings from the sidecar file.
struct SourceSettings {
    ValueKind kind = ValueKind::numerical;
    std::optional<int> bins;
};

using SourceSettingsMap = std::map<std::string, SourceSettings>;

/// Sidecar format: {"s1": {"kind": "categorical"}, "s2": {"kind": "numerical", "bins": 3}}
inline SourceSettingsMap source_settings_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("source settings: expected an object keyed by source id");
    SourceSettingsMap out;
    for (const auto& [source, cfg] : j.items()) {
        SourceSettings s;
        if (cfg.is_string()) {
            s.kind = parse_value_kind(cfg.get<std::string>());
        } else if (cfg.is_object()) {
            if (cfg.contains("kind")) s.kind = parse_value_kind(cfg.at("kind").get<std::string>());
            if (cfg.contains("bins")) {
                const int k = cfg.at("bins").get<int>();
                if (k < 1) throw InputError("source settings: bins for '" + source + "' must be >= 1");
                s.bins = k;
            }
        } else {
            throw InputError("source settings: entry for '" + source + "' must be an object");
        }
        out.emplace(source, s);
    }
    return out;
}

inline SourceSettingsMap load_source_settings(const std::string& path) {
    return source_settings_from_json(detail::read_json_file(path));
}

/// Parses `source_id,timestamp,value` CSV. Sources default to numerical
/// unless `settings` says otherwise. An empty numerical field is read as a
/// missing value (NaN).
inline TimeSeriesDataset parse_timeseries(std::istream& in, const SourceSettingsMap& settings = {}) {
    TimeSeriesDataset ds;
    for (const auto& [s, cfg] : settings) ds.kinds[s] = cfg.kind;

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        auto fields = split(view, ',');
        if (!header_seen) {
            if (fields.size() != 3 || trim(fields[0]) != "source_id" || trim(fields[1]) != "timestamp" ||
                trim(fields[2]) != "value")
                throw InputError("line " + std::to_string(line_no) +
                                 ": expected header 'source_id,timestamp,value'");
            header_seen = true;
            continue;
        }
        if (fields.size() != 3)
            throw InputError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        Record r;
        r.source = std::string(trim(fields[0]));
        r.timestamp = std::string(trim(fields[1]));
        if (r.source.empty()) throw InputError("line " + std::to_string(line_no) + ": empty source_id");
        if (r.timestamp.empty()) throw InputError("line " + std::to_string(line_no) + ": empty timestamp");
        const auto raw = trim(fields[2]);
        if (ds.kind_of(r.source) == ValueKind::numerical) {
            if (raw.empty()) {
                r.value = std::nan("");
            } else {
                auto v = parse_number(raw);
                if (!v || std::isinf(*v))
                    throw InputError("line " + std::to_string(line_no) + ": value '" + std::string(raw) +
                                     "' is not numeric for numerical source '" + r.source + "'");
                r.value = *v;
            }
        } else {
            r.value = std::string(raw);
        }
        ds.sources.insert(r.source);
        ds.records.push_back(std::move(r));
    }
    if (!header_seen) throw InputError("empty input: no header");
    if (ds.records.empty()) throw InputError("no records");
    return ds;
}

/// Sorted cut points; bin i covers (cut[i-1], cut[i]] with open extremes.
class BinScheme {
public:
    BinScheme() = default;

    explicit BinScheme(std::vector<double> cuts) : cuts_(std::move(cuts)) {
        for (std::size_t i = 1; i < cuts_.size(); ++i)
            if (!(cuts_[i - 1] < cuts_[i])) throw InputError("bin cut points must be strictly increasing");
        for (double c : cuts_)
            if (!std::isfinite(c)) throw InputError("bin cut points must be finite");
    }

    const std::vector<double>& cuts() const { return cuts_; }
    std::size_t bin_count() const { return cuts_.size() + 1; }

    /// Values equal to a cut go to the lower bin; out-of-range values clamp
    /// to the extreme bins.
    std::size_t assign(double v) const {
        return static_cast<std::size_t>(std::lower_bound(cuts_.begin(), cuts_.end(), v) - cuts_.begin());
    }

    double lower(std::size_t bin) const { return bin == 0 ? -HUGE_VAL : cuts_.at(bin - 1); }
    double upper(std::size_t bin) const { return bin >= cuts_.size() ? HUGE_VAL : cuts_.at(bin); }

    std::string label(std::size_t bin) const {
        const double hi = upper(bin);
        return "(" + format_number(lower(bin)) + ", " + format_number(hi) + (std::isinf(hi) ? ")" : "]");
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < bin_count(); ++i) out.push_back(label(i));
        return out;
    }

    friend bool operator==(const BinScheme&, const BinScheme&) = default;

private:
    std::vector<double> cuts_;
};

/// Equal-frequency cut points by nearest rank: cut i is the sorted value at
/// rank ceil(i*n/k). Duplicate cuts collapse and a cut at the sample maximum
/// is dropped, so the effective bin count may be smaller than k. NaNs are
/// ignored.
inline BinScheme fit_equal_frequency_bins(std::span<const double> values, int k) {
    if (k < 1) throw InputError("bin count must be >= 1");
    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (double v : values)
        if (!std::isnan(v)) sorted.push_back(v);
    if (sorted.empty()) throw InputError("cannot fit bins to an empty sample");
    std::sort(sorted.begin(), sorted.end());

    const std::size_t n = sorted.size();
    const auto kk = static_cast<std::size_t>(k);
    std::vector<double> cuts;
    for (std::size_t i = 1; i < kk; ++i) {
        const std::size_t rank = (i * n + kk - 1) / kk;  // ceil(i*n/k), 1-based
        const double c = sorted[rank - 1];
        if (c >= sorted.back()) break;
        if (cuts.empty() || cuts.back() < c) cuts.push_back(c);
    }
    return BinScheme(std::move(cuts));
}

struct DiscreteRecord {
    std::string source;
    std::string timestamp;
    std::string cls;
};

/// Time series after discretization: every value is a class label. `domains`
/// lists each source's classes in their natural order (bin order for
/// numerical sources, lexicographic for categorical ones).
struct DiscretizedDataset {
    std::vector<DiscreteRecord> records;
    std::set<std::string> sources;
    std::map<std::string, std::vector<std::string>> domains;
};

/// Fits one scheme per numerical source: `default_bins` unless the settings
/// override it.
inline std::map<std::string, BinScheme> fit_source_schemes(const TimeSeriesDataset& ds, int default_bins,
                                                           const SourceSettingsMap& settings = {}) {
    std::map<std::string, std::vector<double>> samples;
    for (const auto& r : ds.records)
        if (const auto* d = std::get_if<double>(&r.value)) samples[r.source].push_back(*d);
    std::map<std::string, BinScheme> out;
    for (const auto& [source, vals] : samples) {
        int k = default_bins;
        if (auto it = settings.find(source); it != settings.end() && it->second.bins) k = *it->second.bins;
        bool any = std::any_of(vals.begin(), vals.end(), [](double v) { return !std::isnan(v); });
        if (!any) throw InputError("source '" + source + "' has no valid numerical values");
        out.emplace(source, fit_equal_frequency_bins(vals, k));
    }
    return out;
}

/// Replaces numerical values by their bin label; missing (NaN) values are
/// dropped.
inline DiscretizedDataset discretize(const TimeSeriesDataset& ds,
                                     const std::map<std::string, BinScheme>& schemes) {
    DiscretizedDataset out;
    out.sources = ds.sources;
    std::map<std::string, std::set<std::string>> categorical_domains;
    for (const auto& r : ds.records) {
        if (const auto* d = std::get_if<double>(&r.value)) {
            auto it = schemes.find(r.source);
            if (it == schemes.end())
                throw InputError("no bin scheme for numerical source '" + r.source + "'");
            if (std::isnan(*d)) continue;
            out.records.push_back({r.source, r.timestamp, it->second.label(it->second.assign(*d))});
        } else {
            const auto& s = std::get<std::string>(r.value);
            categorical_domains[r.source].insert(s);
            out.records.push_back({r.source, r.timestamp, s});
        }
    }
    for (const auto& source : ds.sources) {
        if (auto it = schemes.find(source); it != schemes.end() && !categorical_domains.count(source))
            out.domains[source] = it->second.labels();
        else if (auto ct = categorical_domains.find(source); ct != categorical_domains.end())
            out.domains[source] = {ct->second.begin(), ct->second.end()};
    }
    return out;
}

}  // namespace semrl
