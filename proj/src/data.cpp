#include "smilegan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smilegan/format.hpp"
#include "smilegan/numerics.hpp"

namespace smilegan {

namespace {

// column index (1-based) of field `field` given comma-separated layout
long column_of_field(const std::vector<std::string>& fields, std::size_t field) {
    long col = 1;
    for (std::size_t i = 0; i < field && i < fields.size(); ++i)
        col += static_cast<long>(fields[i].size()) + 1;
    return col;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_cell(const std::string& cell, long line, long col) {
    if (cell.empty()) throw ParseError(line, col, "empty numeric cell");
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + cell.size())
        throw ParseError(line, col, "not a number: '" + cell + "'");
    if (!std::isfinite(v)) throw ParseError(line, col, "non-finite value");
    return v;
}

bool is_reserved_column(const std::string& name) {
    return name == "id" || name == "group" || name == "age" || name == "sex";
}

void validate_spec(const AtrophySpec& spec, std::size_t n_features,
                   std::size_t cn_count, std::size_t pt_count) {
    if (spec.patterns.empty())
        throw Error(ErrorCode::SpecInvalid, "at least one pattern required");
    std::size_t counted = 0;
    std::size_t with_count = 0;
    for (const auto& p : spec.patterns) {
        if (p.rate_lo < 0.0 || p.rate_hi >= 1.0 || p.rate_lo > p.rate_hi)
            throw Error(ErrorCode::SpecInvalid, "pattern rate must satisfy 0 <= lo <= hi < 1");
        for (std::size_t r : p.rois)
            if (r >= n_features)
                throw Error(ErrorCode::SpecInvalid, "pattern ROI index out of range");
        if (p.count) {
            ++with_count;
            counted += *p.count;
        }
    }
    if (with_count != 0 && with_count != spec.patterns.size())
        throw Error(ErrorCode::SpecInvalid, "pattern counts must be given for all patterns or none");
    if (with_count != 0 && counted != pt_count)
        throw Error(ErrorCode::SpecInvalid, "pattern counts must sum to the PT count");
    if (spec.confounder) {
        const auto& c = *spec.confounder;
        if (c.rate <= 0.0 || c.rate >= 1.0)
            throw Error(ErrorCode::SpecInvalid, "confounder rate must lie in (0, 1)");
        for (std::size_t r : c.rois)
            if (r >= n_features)
                throw Error(ErrorCode::SpecInvalid, "confounder ROI index out of range");
        if (c.cn_count > cn_count || c.pt_count > pt_count)
            throw Error(ErrorCode::SpecInvalid, "confounder counts exceed group sizes");
    }
}

std::vector<std::size_t> pattern_sizes(const AtrophySpec& spec, std::size_t pt_count) {
    const std::size_t k = spec.patterns.size();
    std::vector<std::size_t> sizes(k);
    if (spec.patterns.front().count) {
        for (std::size_t i = 0; i < k; ++i) sizes[i] = *spec.patterns[i].count;
    } else {
        // near-even split; the first (pt_count mod k) patterns get one extra
        for (std::size_t i = 0; i < k; ++i) sizes[i] = pt_count / k + (i < pt_count % k ? 1 : 0);
    }
    return sizes;
}

bool overlaps_any_pattern(const AtrophySpec& spec) {
    if (!spec.confounder) return false;
    std::set<std::size_t> conf(spec.confounder->rois.begin(), spec.confounder->rois.end());
    for (const auto& p : spec.patterns)
        for (std::size_t r : p.rois)
            if (conf.count(r)) return true;
    return false;
}

// Shuffle PT rows, chunk them into the pattern sizes, and scale each row's
// pattern ROIs by (1 - rate) with one rate drawn per participant.
void apply_patterns(Matrix& values, const std::vector<std::size_t>& pt_rows,
                    const AtrophySpec& spec, Rng& rng, GroundTruth& truth) {
    std::vector<std::size_t> order = pt_rows;
    rng.shuffle(order);
    const std::vector<std::size_t> sizes = pattern_sizes(spec, pt_rows.size());

    std::vector<int> label_by_row(values.rows(), -1);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < spec.patterns.size(); ++p) {
        const auto& pat = spec.patterns[p];
        for (std::size_t i = 0; i < sizes[p]; ++i, ++cursor) {
            const std::size_t row = order[cursor];
            label_by_row[row] = static_cast<int>(p);
            const double rate = pat.rate_lo == pat.rate_hi
                                    ? pat.rate_lo
                                    : rng.uniform(pat.rate_lo, pat.rate_hi);
            for (std::size_t r : pat.rois) values(row, r) *= (1.0 - rate);
        }
    }

    truth.pt_labels.clear();
    for (std::size_t row : pt_rows) truth.pt_labels.push_back(label_by_row[row]);
    truth.pattern_rois.clear();
    for (const auto& pat : spec.patterns) truth.pattern_rois.push_back(pat.rois);
}

void apply_confounder(Matrix& values, const std::vector<std::size_t>& cn_rows,
                      const std::vector<std::size_t>& pt_rows, const ConfounderSpec& conf,
                      Rng& rng, GroundTruth& truth) {
    auto pick = [&](const std::vector<std::size_t>& rows, std::size_t count) {
        std::vector<std::size_t> shuffled = rows;
        rng.shuffle(shuffled);
        shuffled.resize(count);
        return shuffled;
    };
    const auto cn_hit = pick(cn_rows, conf.cn_count);
    const auto pt_hit = pick(pt_rows, conf.pt_count);

    std::vector<std::uint8_t> hit(values.rows(), 0);
    for (std::size_t row : cn_hit) hit[row] = 1;
    for (std::size_t row : pt_hit) hit[row] = 1;
    for (std::size_t row = 0; row < values.rows(); ++row) {
        if (!hit[row]) continue;
        for (std::size_t r : conf.rois) values(row, r) *= (1.0 - conf.rate);
    }

    truth.cn_confounder.clear();
    for (std::size_t row : cn_rows) truth.cn_confounder.push_back(hit[row]);
    truth.pt_confounder.clear();
    for (std::size_t row : pt_rows) truth.pt_confounder.push_back(hit[row]);
}

}  // namespace

std::vector<std::size_t> RoiTable::rows_of(Group g) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (groups[i] == g) out.push_back(i);
    return out;
}

Matrix RoiTable::values_at(const std::vector<std::size_t>& rows) const {
    Matrix out(rows.size(), values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = values.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix RoiTable::values_of(Group g) const { return values_at(rows_of(g)); }

RoiTable RoiTable::subset(const std::vector<std::size_t>& rows) const {
    RoiTable out;
    out.feature_names = feature_names;
    out.values = values_at(rows);
    for (std::size_t r : rows) {
        out.ids.push_back(ids[r]);
        out.groups.push_back(groups[r]);
        if (has_covariates()) {
            out.age.push_back(age[r]);
            out.sex.push_back(sex[r]);
        }
    }
    return out;
}

void RoiTable::validate() const {
    const std::size_t n = ids.size();
    if (groups.size() != n || values.rows() != n)
        throw Error(ErrorCode::ShapeMismatch, "table row fields disagree in length");
    if (values.cols() != feature_names.size())
        throw Error(ErrorCode::ShapeMismatch, "feature names do not match value columns");
    if (!age.empty() && (age.size() != n || sex.size() != n))
        throw Error(ErrorCode::ShapeMismatch, "covariate columns must cover every row");
    if (!values.all_finite())
        throw Error(ErrorCode::ShapeMismatch, "table contains non-finite values");
    std::set<std::string> seen;
    for (const auto& f : feature_names)
        if (!seen.insert(f).second)
            throw SchemaError(f, "duplicate feature name");
}

SyntheticResult generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    validate_spec(config.spec, config.n_features, config.cn_count, config.pt_count);

    const std::size_t n = config.cn_count + config.pt_count;
    const std::size_t d = config.n_features;
    Rng rng(seed);

    SyntheticResult out;
    RoiTable& t = out.table;
    t.values = Matrix(n, d);
    for (std::size_t i = 0; i < t.values.size(); ++i)
        t.values.data()[i] = rng.normal(config.baseline_mean, config.baseline_sd);

    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "sub_%04zu", i + 1);
        t.ids.emplace_back(buf);
    }
    t.feature_names.reserve(d);
    for (std::size_t j = 0; j < d; ++j) t.feature_names.push_back("roi_" + std::to_string(j + 1));

    // random half-split into CN and pseudo-PT
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    t.groups.assign(n, Group::PT);
    for (std::size_t i = 0; i < config.cn_count; ++i) t.groups[order[i]] = Group::CN;

    const auto cn_rows = t.rows_of(Group::CN);
    const auto pt_rows = t.rows_of(Group::PT);

    apply_patterns(t.values, pt_rows, config.spec, rng, out.truth);
    if (config.spec.confounder)
        apply_confounder(t.values, cn_rows, pt_rows, *config.spec.confounder, rng, out.truth);
    else {
        out.truth.cn_confounder.assign(cn_rows.size(), 0);
        out.truth.pt_confounder.assign(pt_rows.size(), 0);
    }
    for (std::size_t row : pt_rows) out.truth.pt_ids.push_back(t.ids[row]);
    out.truth.confounder_overlaps_patterns = overlaps_any_pattern(config.spec);
    return out;
}

SyntheticResult inject_atrophy(const RoiTable& base, const AtrophySpec& spec, std::uint64_t seed) {
    base.validate();
    const auto pt_rows = base.rows_of(Group::PT);
    const auto cn_rows = base.rows_of(Group::CN);
    if (pt_rows.empty())
        throw Error(ErrorCode::SpecInvalid, "base table has no PT rows to inject into");
    validate_spec(spec, base.n_features(), cn_rows.size(), pt_rows.size());
    if (!spec.patterns.front().count) {
        // counts optional, but they must be realizable
        if (pt_rows.size() < spec.patterns.size())
            throw Error(ErrorCode::SpecInvalid, "fewer PT rows than patterns");
    }

    Rng rng(seed);
    SyntheticResult out;
    out.table = base;
    apply_patterns(out.table.values, pt_rows, spec, rng, out.truth);
    if (spec.confounder)
        apply_confounder(out.table.values, cn_rows, pt_rows, *spec.confounder, rng, out.truth);
    else {
        out.truth.cn_confounder.assign(cn_rows.size(), 0);
        out.truth.pt_confounder.assign(pt_rows.size(), 0);
    }
    for (std::size_t row : pt_rows) out.truth.pt_ids.push_back(base.ids[row]);
    out.truth.confounder_overlaps_patterns = overlaps_any_pattern(spec);
    return out;
}

PreprocessResult preprocess(const RoiTable& table, Residualize mode) {
    table.validate();
    const auto cn_rows = table.rows_of(Group::CN);
    if (cn_rows.size() < 2)
        throw Error(ErrorCode::InsufficientCN, "need at least 2 CN rows");
    if (mode == Residualize::on && !table.has_covariates())
        throw Error(ErrorCode::MissingCovariates, "age/sex columns required for residualization");
    const bool residualize =
        mode == Residualize::on || (mode == Residualize::automatic && table.has_covariates());

    const std::size_t d = table.n_features();
    PreprocessStats stats;
    stats.residualized = residualize;
    stats.feature_names = table.feature_names;
    stats.cn_mean.resize(d);
    stats.cn_sd.resize(d);

    RoiTable out = table;
    if (residualize) {
        stats.beta_age.resize(d);
        stats.beta_sex.resize(d);
        Matrix design(cn_rows.size(), 3);
        for (std::size_t i = 0; i < cn_rows.size(); ++i) {
            design(i, 0) = 1.0;
            design(i, 1) = table.age[cn_rows[i]];
            design(i, 2) = table.sex[cn_rows[i]];
        }
        Vector targets(cn_rows.size());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < cn_rows.size(); ++i)
                targets[i] = table.values(cn_rows[i], j);
            Vector beta = least_squares_fit(design, targets);
            stats.beta_age[j] = beta[1];
            stats.beta_sex[j] = beta[2];
        }
        // remove covariate effects from every row, keeping the intercept
        for (std::size_t i = 0; i < out.n_rows(); ++i)
            for (std::size_t j = 0; j < d; ++j)
                out.values(i, j) -= stats.beta_age[j] * table.age[i] + stats.beta_sex[j] * table.sex[i];
    }

    const Matrix cn_values = out.values_at(cn_rows);
    GaussianMoments m = sample_moments(cn_values, CovarianceKind::diagonal);
    for (std::size_t j = 0; j < d; ++j) {
        stats.cn_mean[j] = m.mean[j];
        stats.cn_sd[j] = std::sqrt(m.cov_diag[j]);
    }

    for (std::size_t i = 0; i < out.n_rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double sd = stats.cn_sd[j];
            const double centered = out.values(i, j) - stats.cn_mean[j];
            out.values(i, j) = sd > 0.0 ? 1.0 + 0.1 * centered / sd : 1.0;
        }
    }
    return {std::move(out), std::move(stats)};
}

RoiTable apply_preprocess(const PreprocessStats& stats, const RoiTable& table) {
    table.validate();
    if (stats.feature_names != table.feature_names)
        throw SchemaError("feature_names", "stats were fitted on different features");
    if (stats.residualized && !table.has_covariates())
        throw Error(ErrorCode::MissingCovariates, "stats require age/sex columns");

    RoiTable out = table;
    const std::size_t d = table.n_features();
    for (std::size_t i = 0; i < out.n_rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double v = table.values(i, j);
            if (stats.residualized)
                v -= stats.beta_age[j] * table.age[i] + stats.beta_sex[j] * table.sex[i];
            const double sd = stats.cn_sd[j];
            out.values(i, j) = sd > 0.0 ? 1.0 + 0.1 * (v - stats.cn_mean[j]) / sd : 1.0;
        }
    }
    return out;
}

RoiTable read_roi_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);

    if (header.empty() || header[0] != "id") throw SchemaError("id", "first column must be 'id'");
    if (header.size() < 2 || header[1] != "group")
        throw SchemaError("group", "second column must be 'group'");

    bool covariates = header.size() > 2 && header[2] == "age";
    std::size_t roi_start = 2;
    if (covariates) {
        if (header.size() < 4 || header[3] != "sex")
            throw SchemaError("sex", "'age' must be followed by 'sex'");
        roi_start = 4;
    }
    if (header.size() <= roi_start) throw SchemaError("roi", "no ROI columns present");

    RoiTable t;
    std::set<std::string> seen;
    for (std::size_t i = roi_start; i < header.size(); ++i) {
        const std::string& name = header[i];
        if (name.empty()) throw SchemaError("", "empty ROI column name");
        if (is_reserved_column(name)) throw SchemaError(name, "reserved column name out of place");
        if (!seen.insert(name).second) throw SchemaError(name, "duplicate feature name");
        t.feature_names.push_back(name);
    }
    const std::size_t d = t.feature_names.size();

    Vector buffer;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError(line_no, column_of_field(fields, fields.size() - 1),
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        t.ids.push_back(fields[0]);
        if (fields[1] == "CN")
            t.groups.push_back(Group::CN);
        else if (fields[1] == "PT")
            t.groups.push_back(Group::PT);
        else
            throw ParseError(line_no, column_of_field(fields, 1),
                             "group must be CN or PT, got '" + fields[1] + "'");
        if (covariates) {
            t.age.push_back(parse_double_cell(fields[2], line_no, column_of_field(fields, 2)));
            const double sex = parse_double_cell(fields[3], line_no, column_of_field(fields, 3));
            if (sex != 0.0 && sex != 1.0)
                throw ParseError(line_no, column_of_field(fields, 3), "sex must be 0 or 1");
            t.sex.push_back(sex);
        }
        for (std::size_t j = 0; j < d; ++j)
            buffer.push_back(parse_double_cell(fields[roi_start + j], line_no,
                                               column_of_field(fields, roi_start + j)));
    }
    t.values = Matrix::from_data(t.ids.size(), d, std::move(buffer));
    t.validate();
    return t;
}

void write_roi_csv(const RoiTable& table, const std::string& path) {
    table.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);

    out << "id,group";
    if (table.has_covariates()) out << ",age,sex";
    for (const auto& f : table.feature_names) out << ',' << f;
    out << '\n';

    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        out << table.ids[i] << ',' << (table.groups[i] == Group::CN ? "CN" : "PT");
        if (table.has_covariates())
            out << ',' << format_double_17(table.age[i]) << ',' << format_double_17(table.sex[i]);
        for (std::size_t j = 0; j < table.n_features(); ++j)
            out << ',' << format_double_17(table.values(i, j));
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

GroundTruth read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,pattern,confounder_flag")
        throw SchemaError(line, "expected header id,pattern,confounder_flag");

    GroundTruth truth;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw ParseError(line_no, 1, "expected 3 fields");
        truth.pt_ids.push_back(fields[0]);
        truth.pt_labels.push_back(
            static_cast<int>(parse_double_cell(fields[1], line_no, column_of_field(fields, 1))));
        truth.pt_confounder.push_back(
            parse_double_cell(fields[2], line_no, column_of_field(fields, 2)) != 0.0);
    }
    return truth;
}

void write_truth_csv(const GroundTruth& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "id,pattern,confounder_flag\n";
    for (std::size_t i = 0; i < truth.pt_ids.size(); ++i)
        out << truth.pt_ids[i] << ',' << truth.pt_labels[i] << ','
            << int(truth.pt_confounder.empty() ? 0 : truth.pt_confounder[i]) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void write_preprocess_stats(const PreprocessStats& stats, const std::string& path) {
    nlohmann::json j;
    j["residualized"] = stats.residualized;
    j["feature_names"] = stats.feature_names;
    j["beta_age"] = stats.beta_age;
    j["beta_sex"] = stats.beta_sex;
    j["cn_mean"] = stats.cn_mean;
    j["cn_sd"] = stats.cn_sd;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << j.dump(1) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

PreprocessStats read_preprocess_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
        PreprocessStats stats;
        stats.residualized = j.at("residualized").get<bool>();
        stats.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        stats.beta_age = j.at("beta_age").get<Vector>();
        stats.beta_sex = j.at("beta_sex").get<Vector>();
        stats.cn_mean = j.at("cn_mean").get<Vector>();
        stats.cn_sd = j.at("cn_sd").get<Vector>();
        return stats;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatVersionMismatch,
                    "malformed preprocessing stats: " + std::string(e.what()));
    }
}

namespace presets {

namespace {

std::vector<std::size_t> roi_range(std::size_t first, std::size_t last) {
    std::vector<std::size_t> out;
    for (std::size_t r = first; r <= last; ++r) out.push_back(r);
    return out;
}

}  // namespace

SyntheticConfig synthetic_benchmark() {
    SyntheticConfig cfg;
    cfg.cn_count = 600;
    cfg.pt_count = 600;
    cfg.n_features = 145;
    // three overlapping patterns; the confounder lives in disjoint ROIs and is
    // twice as strong as the disease signal
    cfg.spec.patterns = {
        {"pattern_a", roi_range(0, 29), 0.20, 0.20, 200},
        {"pattern_b", roi_range(25, 54), 0.20, 0.20, 200},
        {"pattern_c", roi_range(50, 79), 0.20, 0.20, 200},
    };
    cfg.spec.confounder = ConfounderSpec{roi_range(90, 119), 0.40, 200, 200};
    return cfg;
}

SyntheticConfig holdout_base() {
    SyntheticConfig cfg;
    cfg.cn_count = 200;
    cfg.pt_count = 326;
    cfg.n_features = 145;
    cfg.spec.patterns = {
        {"null", {}, 0.0, 0.0, 326},
    };
    return cfg;
}

AtrophySpec variable_rate_patterns(double rate_lo, double rate_hi) {
    AtrophySpec spec;
    auto focal = roi_range(0, 29);
    auto diffuse = roi_range(40, 69);
    std::vector<std::size_t> combined = focal;
    combined.insert(combined.end(), diffuse.begin(), diffuse.end());
    spec.patterns = {
        {"focal", focal, rate_lo, rate_hi, 109},
        {"diffuse", diffuse, rate_lo, rate_hi, 109},
        {"combined", combined, rate_lo, rate_hi, 108},
    };
    return spec;
}

}  // namespace presets

}  // namespace smilegan
