#include <cids/csv.hpp>

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace cids {

std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i)
        out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::sep() {
    if (filled_ == columns_)
        throw std::logic_error("CsvWriter: too many cells in row");
    if (filled_++ > 0)
        out_ << ',';
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    out_ << format_number(v);
    return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::empty() {
    sep();
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_)
        throw std::logic_error("CsvWriter: row has too few cells");
    out_ << '\n';
    filled_ = 0;
}

void write_curve_csv(std::ostream& out, const TrainingCurve& curve) {
    CsvWriter w(out, kCurveColumns);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        w.cell(i).cell(curve.mean_return[i]).cell(curve.entropy_bits[i]).cell(curve.grad_norm[i]);
        w.cell(curve.kl_surrogate[i]).end_row();
    }
}

void write_regret_csv(std::ostream& out, const RegretReport& report) {
    CsvWriter w(out, kRegretColumns);
    for (std::size_t i = 0; i < report.episodes.size(); ++i) {
        const EpisodeRecord& e = report.episodes[i];
        w.cell(e.episode).cell(e.realized_return).cell(e.posterior_entropy_bits).cell(e.info_gain_bits);
        w.cell(e.delta_proxy).cell(e.i1_proxy).cell(e.i2_realized).cell(report.cumulative_regret[i]);
        if (e.psi)
            w.cell(*e.psi);
        else
            w.empty();
        w.end_row();
    }
}

namespace {

std::vector<std::string> rollout_columns(bool debug) {
    std::vector<std::string> cols = kRolloutColumns;
    if (debug)
        cols.insert(cols.end(), kRolloutDebugColumns.begin(), kRolloutDebugColumns.end());
    return cols;
}

} // namespace

RolloutCsv::RolloutCsv(std::ostream& out, bool debug) : w_(out, rollout_columns(debug)), debug_(debug) {}

void RolloutCsv::add(int episode, const RolloutResult& r) {
    const Trajectory& y = r.trajectory;
    for (std::size_t t = 0; t < y.length(); ++t) {
        const Observation& o = y.observations[t];
        w_.cell(episode).cell(t).cell(y.actions[t]).cell(o.observed ? 1 : 0);
        if (o.observed)
            w_.cell(o.value);
        else
            w_.empty();
        w_.cell(r.rewards[t]);
        if (debug_)
            w_.cell(r.states[t + 1]).cell(r.true_context.index);
        w_.end_row();
    }
}

nlohmann::json regret_summary(const RegretReport& report, double tau) {
    const auto& eps = report.episodes;
    nlohmann::json j;
    j["true_context"] = report.true_context.index;
    j["episodes"] = eps.size();
    j["oracle_values"] = report.oracle_values;
    j["final_entropy_bits"] = eps.empty() ? 0.0 : eps.back().posterior_entropy_bits;
    const std::size_t tail = std::max<std::size_t>(1, eps.size() / 10);
    double tail_return = 0.0;
    for (std::size_t i = eps.size() - std::min(tail, eps.size()); i < eps.size(); ++i)
        tail_return += eps[i].realized_return;
    j["mean_return_last_10pct"] = eps.empty() ? 0.0 : tail_return / static_cast<double>(std::min(tail, eps.size()));
    j["total_info_gain_bits"] = report.cumulative_info_gain_bits;
    j["cumulative_regret"] = report.cumulative_regret.empty() ? 0.0 : report.cumulative_regret.back();
    j["tau_bound_violations"] = report.tau_bound_violations;
    int defined = 0, within = 0;
    for (std::size_t i = eps.size() / 2; i < eps.size(); ++i) {
        if (!eps[i].psi)
            continue;
        ++defined;
        if (*eps[i].psi <= 2.0 * tau)
            ++within;
    }
    j["psi_defined_after_burn_in"] = defined;
    j["psi_within_2tau_after_burn_in"] = within;
    std::vector<double> post;
    for (int i = 0; i < report.final_posterior.size(); ++i)
        post.push_back(report.final_posterior[i]);
    j["final_posterior"] = post;
    return j;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ','))
        out.push_back(cur);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_field(const std::string& s, std::size_t line_no) {
    if (s.empty() || s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw CsvParseError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    return v;
}

} // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw CsvParseError("missing header row");
    if (line.back() == '\r')
        line.pop_back();
    t.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != t.header.size())
            throw CsvParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                                " fields, found " + std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields)
            row.push_back(parse_field(f, line_no));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace cids
