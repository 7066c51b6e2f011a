#ifndef CIDS_CSV_HPP
#define CIDS_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include <cids/cids.hpp>

namespace cids {

/// Shortest "%.9g" rendering; "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double v);

class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& empty();
    void end_row();

private:
    void sep();

    std::ostream& out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

inline const std::vector<std::string> kCurveColumns = {"iter", "mean_return", "entropy_bits", "grad_norm",
                                                       "kl_surrogate"};
inline const std::vector<std::string> kRegretColumns = {"k",       "return", "entropy_bits", "info_gain_bits",
                                                        "delta_hat", "i1_hat", "i2",          "br_cum",
                                                        "psi_hat"};
inline const std::vector<std::string> kRolloutColumns = {"episode", "t", "action", "observed", "z", "reward"};
inline const std::vector<std::string> kRolloutDebugColumns = {"x_true", "context"};

void write_curve_csv(std::ostream& out, const TrainingCurve& curve);

/// An undefined information ratio is written as an empty field.
void write_regret_csv(std::ostream& out, const RegretReport& report);

class RolloutCsv {
public:
    RolloutCsv(std::ostream& out, bool debug);
    void add(int episode, const RolloutResult& r);

private:
    CsvWriter w_;
    bool debug_;
};

/// Final entropy, mean return over the last 10% of episodes, total
/// information gain and violation counts.
nlohmann::json regret_summary(const RegretReport& report, double tau);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; ///< empty fields read as NaN

    /// Column index, or -1.
    int column(const std::string& name) const;
};

struct CsvParseError : Error {
    using Error::Error;
};

/// Strict numeric CSV reader: a header row, then rows of equal width.
CsvTable read_csv(std::istream& in);

} // namespace cids

#endif
