#pragma once

#include "ptlsi/data_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ptlsi {

/// RFC 4180 table; the first record is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws ValidationError when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

struct IngestOptions {
    std::string target_column;
    /// Single-file mode: rows whose domain equals `target_domain` form the
    /// target; every other domain value is one source task.
    std::optional<std::string> domain_column;
    std::string target_domain;
    /// Rows kept per task after seeded subsampling (all rows when unset;
    /// sources default to the smallest source size).
    std::optional<Index> target_rows;
    std::optional<Index> source_rows;
    std::uint64_t seed = 0;
    /// Center and scale every feature column over all rows.
    bool standardize = false;
    /// Noise variance; estimated from target residuals when unset.
    std::optional<double> sigma2;
};

struct IngestResult {
    MultiTaskData data;
    std::vector<std::string> feature_names;
    std::string target_column;
    std::string target_domain;
    std::vector<std::string> source_domains;
    std::size_t dropped_rows = 0; // rows with missing values
    double sigma2 = 1.0;
    bool sigma2_estimated = false;
};

IngestResult ingest_csv(const std::string& path, const IngestOptions& opts);
IngestResult ingest_tables(const CsvTable& target, const std::vector<CsvTable>& sources, const IngestOptions& opts);
IngestResult ingest_files(const std::string& target_path, const std::vector<std::string>& source_paths,
                          const IngestOptions& opts);

/// Target-residual variance from a preliminary lasso fit at the default lambda.
double estimate_noise_variance(const TaskData& target);

/// Re-emits ingested data as one table: features, target column, and a
/// domain column (target rows first, then each source).
CsvTable to_table(const IngestResult& ingested, const std::string& domain_column = "domain");

} // namespace ptlsi
