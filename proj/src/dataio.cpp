#include "respire/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>

namespace respire {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_int(std::string_view s, int &out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

std::optional<double> parse_field(std::string_view s, std::size_t line, std::string_view column) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError("column '" + std::string(column) + "': not a number: '" + std::string(s) + "'", line);
    if (!std::isfinite(v)) throw ParseError("column '" + std::string(column) + "': non-finite value", line);
    return v;
}

struct CsvTable {
    std::vector<std::size_t> columns;  // positions of the requested columns
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
    std::vector<std::string> storage;
};

// Reads a header-bearing CSV and resolves the required column names.
CsvTable read_table(std::istream &in, std::span<const std::string_view> required) {
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<std::pair<std::size_t, std::string>> raw_rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (!have_header) {
            const auto header = split_csv(line);
            for (auto name : required) {
                auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end()) throw ParseError("missing column '" + std::string(name) + "'", lineno);
                table.columns.push_back(static_cast<std::size_t>(it - header.begin()));
            }
            have_header = true;
            continue;
        }
        raw_rows.emplace_back(lineno, line);
    }
    if (!have_header) throw ParseError("missing CSV header", 1);
    table.storage.reserve(raw_rows.size());
    for (auto &[no, text] : raw_rows) table.storage.push_back(std::move(text));
    for (std::size_t i = 0; i < raw_rows.size(); ++i) {
        auto fields = split_csv(table.storage[i]);
        const auto need = *std::max_element(table.columns.begin(), table.columns.end());
        if (fields.size() <= need) throw ParseError("too few fields", raw_rows[i].first);
        std::vector<std::string_view> picked;
        for (auto c : table.columns) picked.push_back(fields[c]);
        table.rows.emplace_back(raw_rows[i].first, std::move(picked));
    }
    return table;
}

Timestamp parse_row_timestamp(std::string_view s, std::size_t line) {
    auto t = parse_timestamp(s);
    if (!t) throw ParseError("unparseable timestamp '" + std::string(s) + "'", line);
    return *t;
}

template <typename Record>
void check_increasing(const std::vector<Record> &records, const std::vector<std::size_t> &lines) {
    for (std::size_t i = 1; i < records.size(); ++i)
        if (!(records[i - 1].t < records[i].t)) throw ParseError("timestamps must be strictly increasing", lines[i]);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Shared window averaging over F optional fields per record.
template <std::size_t F>
std::vector<std::pair<Timestamp, std::array<double, F>>> window_means(
    const std::vector<std::pair<Timestamp, std::array<std::optional<double>, F>>> &rows, const ResampleOptions &opts) {
    if (opts.window.count() <= 0) throw Error("resample window must be positive");
    const std::int64_t w = opts.window.count();
    std::vector<std::pair<Timestamp, std::array<double, F>>> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        const std::int64_t key = floor_div(rows[i].first.time_since_epoch().count(), w);
        std::array<double, F> sum{};
        std::array<int, F> valid{};
        int present = 0;
        for (; i < rows.size() && floor_div(rows[i].first.time_since_epoch().count(), w) == key; ++i) {
            ++present;
            for (std::size_t f = 0; f < F; ++f)
                if (rows[i].second[f]) {
                    sum[f] += *rows[i].second[f];
                    ++valid[f];
                }
        }
        const double denom = std::max(present, opts.nominal_samples);
        bool keep = true;
        for (std::size_t f = 0; f < F; ++f)
            if (valid[f] == 0 || valid[f] < opts.min_valid_fraction * denom) keep = false;
        if (!keep) continue;
        std::array<double, F> mean{};
        for (std::size_t f = 0; f < F; ++f) mean[f] = sum[f] / valid[f];
        out.emplace_back(Timestamp{std::chrono::seconds{key * w}}, mean);
    }
    return out;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    s = trim(s);
    // YYYY-MM-DD
    if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
        return std::nullopt;
    int year, month, day, hour, minute, second = 0;
    if (!parse_int(s.substr(0, 4), year) || !parse_int(s.substr(5, 2), month) || !parse_int(s.substr(8, 2), day) ||
        !parse_int(s.substr(11, 2), hour) || !parse_int(s.substr(14, 2), minute))
        return std::nullopt;
    std::string_view rest = s.substr(16);
    if (!rest.empty() && rest.front() == ':') {
        if (rest.size() < 3 || !parse_int(rest.substr(1, 2), second)) return std::nullopt;
        rest.remove_prefix(3);
        if (!rest.empty() && rest.front() == '.') {
            rest.remove_prefix(1);
            while (!rest.empty() && rest.front() >= '0' && rest.front() <= '9') rest.remove_prefix(1);
        }
    }
    int offset_minutes = 0;
    if (rest == "Z" || rest.empty()) {
    } else if ((rest.front() == '+' || rest.front() == '-') && (rest.size() == 6 || rest.size() == 5)) {
        int oh, om;
        const bool colon = rest.size() == 6;
        if (colon && rest[3] != ':') return std::nullopt;
        if (!parse_int(rest.substr(1, 2), oh) || !parse_int(rest.substr(colon ? 4 : 3, 2), om)) return std::nullopt;
        offset_minutes = (rest.front() == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
        return std::nullopt;
    }
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

AlignedDataset AlignedDataset::slice(Index begin, Index count) const {
    AlignedDataset out;
    out.id = id;
    out.norm = norm;
    out.t.assign(t.begin() + begin, t.begin() + begin + count);
    out.x1 = x1.segment(begin, count);
    out.x2 = x2.segment(begin, count);
    out.temp = temp.segment(begin, count);
    out.z = z.segment(begin, count);
    out.y = y.segment(begin, count);
    return out;
}

AlignedDataset AlignedDataset::select(const std::vector<Index> &rows) const {
    AlignedDataset out;
    out.id = id;
    out.norm = norm;
    const auto n = static_cast<Index>(rows.size());
    out.x1.resize(n), out.x2.resize(n), out.temp.resize(n), out.z.resize(n), out.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        out.t.push_back(t[static_cast<std::size_t>(r)]);
        out.x1(i) = x1(r), out.x2(i) = x2(r), out.temp(i) = temp(r), out.z(i) = z(r), out.y(i) = y(r);
    }
    return out;
}

AlignedDataset AlignedDataset::normalized_with(const NormParams<double> &params) const {
    AlignedDataset out = *this;
    out.norm = params;
    out.z = (temp.array() - params.min) / params.range();
    return out;
}

MatrixXd AlignedDataset::ops() const {
    MatrixXd m(size(), 2);
    m.col(0) = x1;
    m.col(1) = x2;
    return m;
}

void AlignedDataset::validate() const {
    const Index n = size();
    if (n < 1) throw EmptyDatasetError("aligned dataset is empty");
    if (x1.size() != n || x2.size() != n || temp.size() != n || z.size() != n ||
        static_cast<Index>(t.size()) != n)
        throw Error("aligned dataset columns have inconsistent lengths");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i - 1] < t[i])) throw Error("aligned dataset timestamps must be strictly increasing");
}

NormParams<double> fit_norm_params(const VectorXd &temp) {
    if (temp.size() == 0) throw EmptyDatasetError("cannot normalize an empty auxiliary vector");
    return {temp.minCoeff(), temp.maxCoeff()};
}

RawSensorSeries resample_average(const RawSensorSeries &raw, const ResampleOptions &opts) {
    std::vector<std::pair<Timestamp, std::array<std::optional<double>, 3>>> rows;
    rows.reserve(raw.records.size());
    for (const auto &r : raw.records) rows.push_back({r.t, {r.op1, r.op2, r.temp}});
    RawSensorSeries out;
    out.sensor_id = raw.sensor_id;
    for (const auto &[t, v] : window_means<3>(rows, opts)) out.records.push_back({t, v[0], v[1], v[2]});
    return out;
}

ReferenceSeries resample_average(const ReferenceSeries &raw, const ResampleOptions &opts) {
    std::vector<std::pair<Timestamp, std::array<std::optional<double>, 1>>> rows;
    rows.reserve(raw.records.size());
    for (const auto &r : raw.records) rows.push_back({r.t, {r.co}});
    ReferenceSeries out;
    for (const auto &[t, v] : window_means<1>(rows, opts)) out.records.push_back({t, v[0]});
    return out;
}

AlignedDataset align(const RawSensorSeries &lcaq, const ReferenceSeries &ref) {
    std::vector<std::tuple<Timestamp, double, double, double, double>> kept;
    std::size_t j = 0;
    for (const auto &s : lcaq.records) {
        while (j < ref.records.size() && ref.records[j].t < s.t) ++j;
        if (j == ref.records.size()) break;
        if (ref.records[j].t != s.t) continue;
        const auto &r = ref.records[j];
        if (s.op1 && s.op2 && s.temp && r.co) kept.emplace_back(s.t, *s.op1, *s.op2, *s.temp, *r.co);
    }
    if (kept.empty()) throw EmptyDatasetError("sensor and reference series have no overlapping valid timestamps");
    AlignedDataset ds;
    ds.id = lcaq.sensor_id;
    const auto n = static_cast<Index>(kept.size());
    ds.x1.resize(n), ds.x2.resize(n), ds.temp.resize(n), ds.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto &[t, a, b, c, d] = kept[static_cast<std::size_t>(i)];
        ds.t.push_back(t);
        ds.x1(i) = a, ds.x2(i) = b, ds.temp(i) = c, ds.y(i) = d;
    }
    return ds.normalized_with(fit_norm_params(ds.temp));
}

std::pair<AlignedDataset, AlignedDataset> temporal_split(const AlignedDataset &ds, double train_frac) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error("train fraction must lie in (0, 1)");
    const Index n = ds.size();
    if (n < 2) throw Error("temporal_split needs at least two records");
    auto n_train = static_cast<Index>(std::ceil(train_frac * static_cast<double>(n) - 1e-12));
    n_train = std::clamp<Index>(n_train, 1, n - 1);
    const auto params = fit_norm_params(ds.temp.head(n_train));
    return {ds.slice(0, n_train).normalized_with(params), ds.slice(n_train, n - n_train).normalized_with(params)};
}

RawSensorSeries read_sensor_csv(std::istream &in, std::string sensor_id) {
    static constexpr std::array<std::string_view, 4> cols{"timestamp", "op1_mv", "op2_mv", "temp_c"};
    const CsvTable table = read_table(in, cols);
    RawSensorSeries out;
    out.sensor_id = std::move(sensor_id);
    std::vector<std::size_t> lines;
    for (const auto &[line, f] : table.rows) {
        out.records.push_back({parse_row_timestamp(f[0], line), parse_field(f[1], line, cols[1]),
                               parse_field(f[2], line, cols[2]), parse_field(f[3], line, cols[3])});
        lines.push_back(line);
    }
    check_increasing(out.records, lines);
    return out;
}

ReferenceSeries read_reference_csv(std::istream &in) {
    static constexpr std::array<std::string_view, 2> cols{"timestamp", "co_ref"};
    const CsvTable table = read_table(in, cols);
    ReferenceSeries out;
    std::vector<std::size_t> lines;
    for (const auto &[line, f] : table.rows) {
        out.records.push_back({parse_row_timestamp(f[0], line), parse_field(f[1], line, cols[1])});
        lines.push_back(line);
    }
    check_increasing(out.records, lines);
    return out;
}

AlignedDataset read_aligned_csv(std::istream &in, std::string id) {
    static constexpr std::array<std::string_view, 5> cols{"timestamp", "op1_mv", "op2_mv", "temp_c", "co_ref"};
    const CsvTable table = read_table(in, cols);
    AlignedDataset ds;
    ds.id = std::move(id);
    const auto n = static_cast<Index>(table.rows.size());
    if (n == 0) throw EmptyDatasetError("aligned CSV has no records");
    ds.x1.resize(n), ds.x2.resize(n), ds.temp.resize(n), ds.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto &[line, f] = table.rows[static_cast<std::size_t>(i)];
        ds.t.push_back(parse_row_timestamp(f[0], line));
        VectorXd *targets[] = {&ds.x1, &ds.x2, &ds.temp, &ds.y};
        for (std::size_t c = 0; c < 4; ++c) {
            auto v = parse_field(f[c + 1], line, cols[c + 1]);
            if (!v) throw ParseError("aligned CSV may not contain missing values (column '" +
                                         std::string(cols[c + 1]) + "')",
                                     line);
            (*targets[c])(i) = *v;
        }
        if (i > 0 && !(ds.t[static_cast<std::size_t>(i) - 1] < ds.t[static_cast<std::size_t>(i)]))
            throw ParseError("timestamps must be strictly increasing", line);
    }
    return ds.normalized_with(fit_norm_params(ds.temp));
}

void write_aligned_csv(std::ostream &out, const AlignedDataset &ds) {
    out << "timestamp,op1_mv,op2_mv,temp_c,co_ref\n";
    for (Index i = 0; i < ds.size(); ++i)
        out << format_timestamp(ds.t[static_cast<std::size_t>(i)]) << ',' << format_double(ds.x1(i)) << ','
            << format_double(ds.x2(i)) << ',' << format_double(ds.temp(i)) << ',' << format_double(ds.y(i)) << '\n';
}

namespace {
std::ifstream open_in(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return in;
}
}  // namespace

RawSensorSeries read_sensor_csv_file(const std::string &path) {
    auto in = open_in(path);
    return read_sensor_csv(in, path);
}

ReferenceSeries read_reference_csv_file(const std::string &path) {
    auto in = open_in(path);
    return read_reference_csv(in);
}

AlignedDataset read_aligned_csv_file(const std::string &path, std::string id) {
    auto in = open_in(path);
    return read_aligned_csv(in, id.empty() ? path : std::move(id));
}

void write_aligned_csv_file(const std::string &path, const AlignedDataset &ds) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_aligned_csv(out, ds);
}

}  // namespace respire
