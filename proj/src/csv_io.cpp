#include "ptlsi/csv_io.hpp"

#include "ptlsi/errors.hpp"
#include "ptlsi/weighted_lasso.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace ptlsi {

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("CSV has no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;      // inside a quoted field
    bool field_begun = false; // the current record has content
    char c;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        field_begun = false;
    };
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty()) throw ValidationError("CSV: quote inside an unquoted field");
            quoted = true;
            field_begun = true;
            break;
        case ',':
            end_field();
            field_begun = true;
            break;
        case '\r':
            if (in.peek() == '\n') in.get(c);
            [[fallthrough]];
        case '\n':
            if (field_begun || !field.empty() || !record.empty()) end_record();
            break;
        default:
            field.push_back(c);
            field_begun = true;
        }
    }
    if (quoted) throw ValidationError("CSV: unterminated quoted field");
    if (field_begun || !field.empty() || !record.empty()) end_record();

    if (records.empty()) throw ValidationError("CSV: missing header row");
    CsvTable t;
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].size() != t.header.size()) {
            throw ValidationError("CSV: record " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                                  " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_csv(in);
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
    double v = 0.0;
    std::size_t b = s.find_first_not_of(' ');
    std::size_t e = s.find_last_not_of(' ');
    const char* first = s.data() + (b == std::string::npos ? s.size() : b);
    const char* last = s.data() + (e == std::string::npos ? s.size() : e + 1);
    if (first < last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ValidationError("CSV: non-numeric value '" + s + "' in column '" + column + "' (data row " +
                              std::to_string(row + 1) + ")");
    }
    return v;
}

struct Block {
    std::string name;
    MatrixXd x;
    VectorXd y;
};

// Numeric rows of `table` restricted to `rows`; rows with a missing feature or
// target are dropped and counted.
Block numeric_block(const CsvTable& t, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& feat,
                    std::size_t target, std::size_t& dropped) {
    std::vector<std::size_t> keep;
    for (std::size_t r : rows) {
        bool missing = is_missing(t.rows[r][target]);
        for (std::size_t c : feat) missing = missing || is_missing(t.rows[r][c]);
        if (missing) {
            ++dropped;
        } else {
            keep.push_back(r);
        }
    }
    Block b;
    b.x.resize(static_cast<Index>(keep.size()), static_cast<Index>(feat.size()));
    b.y.resize(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto& rec = t.rows[keep[i]];
        for (std::size_t j = 0; j < feat.size(); ++j) {
            b.x(static_cast<Index>(i), static_cast<Index>(j)) = parse_number(rec[feat[j]], t.header[feat[j]], keep[i]);
        }
        b.y[static_cast<Index>(i)] = parse_number(rec[target], t.header[target], keep[i]);
    }
    return b;
}

void subsample(Block& b, Index n, std::mt19937_64& rng) {
    if (n > b.x.rows()) {
        throw ValidationError("domain '" + b.name + "' has " + std::to_string(b.x.rows()) + " usable rows, " +
                              std::to_string(n) + " requested");
    }
    if (n == b.x.rows()) return;
    std::vector<Index> idx(static_cast<std::size_t>(b.x.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    MatrixXd x(n, b.x.cols());
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        x.row(i) = b.x.row(idx[static_cast<std::size_t>(i)]);
        y[i] = b.y[idx[static_cast<std::size_t>(i)]];
    }
    b.x = std::move(x);
    b.y = std::move(y);
}

std::vector<std::size_t> feature_columns(const CsvTable& t, std::size_t target,
                                         std::optional<std::size_t> domain = std::nullopt) {
    std::vector<std::size_t> f;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c != target && (!domain || c != *domain)) f.push_back(c);
    }
    if (f.empty()) throw ValidationError("CSV: no feature columns");
    return f;
}

IngestResult assemble(Block target, std::vector<Block> sources, std::vector<std::string> names, std::size_t dropped,
                      const IngestOptions& opts) {
    if (sources.empty()) throw ValidationError("ingest: at least one source domain is required");
    std::mt19937_64 rng(opts.seed);
    if (opts.target_rows) subsample(target, *opts.target_rows, rng);
    Index n_s = opts.source_rows.value_or(std::numeric_limits<Index>::max());
    if (!opts.source_rows) {
        for (const auto& s : sources) n_s = std::min(n_s, s.x.rows());
    }
    for (auto& s : sources) subsample(s, n_s, rng);
    if (target.x.rows() < 2 || n_s < 1) throw ValidationError("ingest: too few rows after filtering");

    if (opts.standardize) {
        const Index p = target.x.cols();
        Index total = target.x.rows();
        for (const auto& s : sources) total += s.x.rows();
        for (Index j = 0; j < p; ++j) {
            double sum = target.x.col(j).sum(), sq = target.x.col(j).squaredNorm();
            for (const auto& s : sources) {
                sum += s.x.col(j).sum();
                sq += s.x.col(j).squaredNorm();
            }
            const double mean = sum / static_cast<double>(total);
            const double var = sq / static_cast<double>(total) - mean * mean;
            const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
            target.x.col(j) = (target.x.col(j).array() - mean) / sd;
            for (auto& s : sources) s.x.col(j) = (s.x.col(j).array() - mean) / sd;
        }
    }

    IngestResult out;
    out.feature_names = std::move(names);
    out.target_column = opts.target_column;
    out.target_domain = target.name;
    out.dropped_rows = dropped;
    TaskData tgt = TaskData::with_isotropic_noise(target.x, target.y, 1.0);
    if (opts.sigma2) {
        if (!(*opts.sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
        out.sigma2 = *opts.sigma2;
    } else {
        out.sigma2 = estimate_noise_variance(tgt);
        out.sigma2_estimated = true;
    }
    out.data.target = TaskData::with_isotropic_noise(std::move(target.x), std::move(target.y), out.sigma2);
    for (auto& s : sources) {
        out.source_domains.push_back(s.name);
        out.data.sources.push_back(TaskData::with_isotropic_noise(std::move(s.x), std::move(s.y), out.sigma2));
    }
    validate(out.data);
    return out;
}

} // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    auto line = [&](const std::vector<std::string>& rec) {
        for (std::size_t i = 0; i < rec.size(); ++i) {
            if (i) out << ',';
            out << quote(rec[i]);
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
}

double estimate_noise_variance(const TaskData& target) {
    const Index n = target.rows();
    const Index p = target.cols();
    const double lambda = std::sqrt(std::log(static_cast<double>(std::max<Index>(p, 2))) / static_cast<double>(n));
    WeightedLassoSolver solver(target.design, static_cast<double>(n), lambda, VectorXd::Ones(p));
    const L1Solution sol = solver.solve(target.response);
    const double rss = (target.response - target.design * sol.coefficients).squaredNorm();
    const Index dof = n - static_cast<Index>(sol.active.size());
    if (dof >= 1 && rss > 0.0) return rss / static_cast<double>(dof);
    const double mean = target.response.mean();
    const double var = (target.response.array() - mean).square().sum() / static_cast<double>(std::max<Index>(n - 1, 1));
    if (!(var > 0.0)) throw DegenerateVarianceError("cannot estimate the noise variance: constant response");
    return var;
}

IngestResult ingest_csv(const std::string& path, const IngestOptions& opts) {
    const CsvTable t = read_csv_file(path);
    if (!opts.domain_column) throw ValidationError("ingest_csv: a domain column is required for single-file input");
    const std::size_t target = t.column(opts.target_column);
    const std::size_t domain = t.column(*opts.domain_column);
    const auto feat = feature_columns(t, target, domain);

    std::map<std::string, std::vector<std::size_t>> by_domain;
    std::vector<std::string> order;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string& d = t.rows[r][domain];
        if (!by_domain.count(d)) order.push_back(d);
        by_domain[d].push_back(r);
    }
    if (!by_domain.count(opts.target_domain)) {
        throw ValidationError("ingest_csv: target domain '" + opts.target_domain + "' has no rows");
    }
    std::size_t dropped = 0;
    Block tgt = numeric_block(t, by_domain[opts.target_domain], feat, target, dropped);
    tgt.name = opts.target_domain;
    std::vector<Block> sources;
    for (const auto& d : order) {
        if (d == opts.target_domain) continue;
        Block b = numeric_block(t, by_domain[d], feat, target, dropped);
        b.name = d;
        sources.push_back(std::move(b));
    }
    std::vector<std::string> names;
    for (std::size_t c : feat) names.push_back(t.header[c]);
    return assemble(std::move(tgt), std::move(sources), std::move(names), dropped, opts);
}

IngestResult ingest_tables(const CsvTable& target, const std::vector<CsvTable>& sources, const IngestOptions& opts) {
    const std::size_t tcol = target.column(opts.target_column);
    const auto feat = feature_columns(target, tcol);
    std::vector<std::string> names;
    for (std::size_t c : feat) names.push_back(target.header[c]);

    std::size_t dropped = 0;
    std::vector<std::size_t> all(target.rows.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Block tgt = numeric_block(target, all, feat, tcol, dropped);
    tgt.name = opts.target_domain.empty() ? "target" : opts.target_domain;

    std::vector<Block> blocks;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        const CsvTable& s = sources[k];
        if (s.header != target.header) {
            throw ValidationError("source " + std::to_string(k + 1) + " header does not match the target header");
        }
        std::vector<std::size_t> rows(s.rows.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        Block b = numeric_block(s, rows, feat, tcol, dropped);
        b.name = "source" + std::to_string(k + 1);
        blocks.push_back(std::move(b));
    }
    return assemble(std::move(tgt), std::move(blocks), std::move(names), dropped, opts);
}

IngestResult ingest_files(const std::string& target_path, const std::vector<std::string>& source_paths,
                          const IngestOptions& opts) {
    std::vector<CsvTable> sources;
    for (const auto& p : source_paths) sources.push_back(read_csv_file(p));
    return ingest_tables(read_csv_file(target_path), sources, opts);
}

CsvTable to_table(const IngestResult& ing, const std::string& domain_column) {
    CsvTable t;
    t.header = ing.feature_names;
    t.header.push_back(ing.target_column);
    t.header.push_back(domain_column);
    auto emit = [&](const TaskData& task, const std::string& name) {
        for (Index i = 0; i < task.rows(); ++i) {
            std::vector<std::string> rec;
            for (Index j = 0; j < task.cols(); ++j) rec.push_back(format_number(task.design(i, j)));
            rec.push_back(format_number(task.response[i]));
            rec.push_back(name);
            t.rows.push_back(std::move(rec));
        }
    };
    emit(ing.data.target, ing.target_domain);
    for (std::size_t k = 0; k < ing.data.sources.size(); ++k) emit(ing.data.sources[k], ing.source_domains[k]);
    return t;
}

} // namespace ptlsi
