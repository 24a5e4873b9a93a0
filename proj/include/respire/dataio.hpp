#pragma once

#include "respire/types.hpp"

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace respire {

using Timestamp = std::chrono::sys_seconds;

/// Parses ISO-8601 UTC instants: `YYYY-MM-DDTHH:MM[:SS]` with optional fractional seconds
/// (truncated), optional `Z` or `+00:00` suffix; a space may replace the `T`.
[[nodiscard]] std::optional<Timestamp> parse_timestamp(std::string_view text);
/// Renders `YYYY-MM-DDTHH:MM:SSZ`.
[[nodiscard]] std::string format_timestamp(Timestamp t);

struct SensorRecord {
    Timestamp t;
    std::optional<double> op1;   // millivolts
    std::optional<double> op2;   // millivolts
    std::optional<double> temp;  // degrees Celsius
};

struct RawSensorSeries {
    std::string sensor_id;
    std::vector<SensorRecord> records;
};

struct ReferenceRecord {
    Timestamp t;
    std::optional<double> co;
};

struct ReferenceSeries {
    std::vector<ReferenceRecord> records;
};

/// Time-aligned calibration data. `z` is the min-max normalized copy of `temp` under `norm`.
struct AlignedDataset {
    std::string id;
    std::vector<Timestamp> t;
    VectorXd x1, x2, temp, z, y;
    NormParams<double> norm;

    [[nodiscard]] Index size() const { return y.size(); }
    /// Contiguous slice [begin, begin + count), keeping the current normalization.
    [[nodiscard]] AlignedDataset slice(Index begin, Index count) const;
    /// Rows at the given indices, in the given order, keeping the current normalization.
    [[nodiscard]] AlignedDataset select(const std::vector<Index> &rows) const;
    /// Copy with `z` recomputed from `temp` under the given parameters.
    [[nodiscard]] AlignedDataset normalized_with(const NormParams<double> &params) const;
    /// Rows as an N x 2 matrix of (op1, op2).
    [[nodiscard]] MatrixXd ops() const;
    void validate() const;
};

/// Min/max of the raw auxiliary values.
[[nodiscard]] NormParams<double> fit_norm_params(const VectorXd &temp);

struct ResampleOptions {
    std::chrono::seconds window{15 * 60};
    /// Windows where any field has fewer valid readings than this fraction are dropped.
    double min_valid_fraction = 0.5;
    /// Expected readings per window (0: use the number of rows present in the window).
    int nominal_samples = 0;
};

[[nodiscard]] RawSensorSeries resample_average(const RawSensorSeries &raw, const ResampleOptions &opts = {});
[[nodiscard]] ReferenceSeries resample_average(const ReferenceSeries &raw, const ResampleOptions &opts = {});

/// Timestamps valid in both inputs; z normalized over the retained records.
/// Throws EmptyDatasetError when nothing overlaps.
[[nodiscard]] AlignedDataset align(const RawSensorSeries &lcaq, const ReferenceSeries &ref);

/// First ceil(frac * N) records (at most N - 1) to train, the rest to test. Both parts are
/// normalized with the train portion's min/max.
[[nodiscard]] std::pair<AlignedDataset, AlignedDataset> temporal_split(const AlignedDataset &ds,
                                                                       double train_frac = 0.8);

// CSV surfaces. Missing values are empty fields.
[[nodiscard]] RawSensorSeries read_sensor_csv(std::istream &in, std::string sensor_id = {});
[[nodiscard]] ReferenceSeries read_reference_csv(std::istream &in);
[[nodiscard]] AlignedDataset read_aligned_csv(std::istream &in, std::string id = {});
void write_aligned_csv(std::ostream &out, const AlignedDataset &ds);

[[nodiscard]] RawSensorSeries read_sensor_csv_file(const std::string &path);
[[nodiscard]] ReferenceSeries read_reference_csv_file(const std::string &path);
[[nodiscard]] AlignedDataset read_aligned_csv_file(const std::string &path, std::string id = {});
void write_aligned_csv_file(const std::string &path, const AlignedDataset &ds);

/// Shortest round-trip decimal rendering of a double.
[[nodiscard]] std::string format_double(double v);

}  // namespace respire
