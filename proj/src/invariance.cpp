#include <cids/cids.hpp>

#include <algorithm>
#include <limits>

namespace cids {

namespace {

constexpr double kValueTol = 1e-9;

struct Node {
    std::vector<int> history;
    Vector alpha[2]; // joint P(state, history) under each context
    std::vector<double> gain[2];  // expected reward per action
    std::vector<std::vector<std::size_t>> children; // per action
};

class HistoryTree {
public:
    HistoryTree(const DiscreteCPOMDP& m, ContextId ci, ContextId cj, int horizon) : m_(m), ctx_{ci.index, cj.index} {
        for (int o = 0; o < m.num_obs; ++o) {
            Vector a[2];
            for (int k = 0; k < 2; ++k)
                a[k] = m.init[ctx_[k]].cwiseProduct(m.emission[ctx_[k]].col(o));
            if (a[0].sum() > 0.0 || a[1].sum() > 0.0)
                roots_.push_back(add({o}, std::move(a[0]), std::move(a[1]), horizon - 1));
        }
    }

    const std::vector<std::size_t>& roots() const { return roots_; }
    const Node& node(std::size_t id) const { return nodes_[id]; }

private:
    std::size_t add(std::vector<int> history, Vector a0, Vector a1, int remaining) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({});
        {
            Node& n = nodes_[id];
            n.history = std::move(history);
            n.alpha[0] = std::move(a0);
            n.alpha[1] = std::move(a1);
            for (int k = 0; k < 2; ++k)
                n.gain[k].resize(static_cast<std::size_t>(m_.num_actions));
            n.children.resize(static_cast<std::size_t>(m_.num_actions));
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < m_.num_actions; ++a)
                    n.gain[k][static_cast<std::size_t>(a)] = n.alpha[k].dot(m_.reward[ctx_[k]].col(a));
        }
        if (remaining == 0)
            return id;
        for (int a = 0; a < m_.num_actions; ++a) {
            for (int o = 0; o < m_.num_obs; ++o) {
                Vector next[2];
                for (int k = 0; k < 2; ++k) {
                    const auto& P = m_.transition[ctx_[k]][static_cast<std::size_t>(a)];
                    next[k] = (P.transpose() * nodes_[id].alpha[k]).cwiseProduct(m_.emission[ctx_[k]].col(o));
                }
                if (next[0].sum() <= 0.0 && next[1].sum() <= 0.0)
                    continue;
                std::vector<int> h = nodes_[id].history;
                h.push_back(o);
                const std::size_t child = add(std::move(h), std::move(next[0]), std::move(next[1]), remaining - 1);
                nodes_[id].children[static_cast<std::size_t>(a)].push_back(child);
            }
        }
        return id;
    }

    const DiscreteCPOMDP& m_;
    std::size_t ctx_[2];
    std::vector<Node> nodes_;
    std::vector<std::size_t> roots_;
};

// Number of policies below a node, saturating at cap + 1.
std::size_t count_policies(const HistoryTree& tree, std::size_t id, std::size_t cap) {
    const Node& n = tree.node(id);
    std::size_t total = 0;
    for (const auto& kids : n.children) {
        std::size_t prod = 1;
        for (std::size_t c : kids) {
            const std::size_t sub = count_policies(tree, c, cap);
            prod = sub > (cap + 1) / prod ? cap + 1 : prod * sub;
            if (prod > cap)
                break;
        }
        total = std::min(cap + 1, total + prod);
    }
    return total;
}

// Among policies whose primary value is within tolerance of `target`, keeps
// the one with the highest secondary value.
struct Best {
    double target = 0.0;
    double secondary = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::size_t, int>> rules;

    void offer(double p, double s, const std::vector<std::pair<std::size_t, int>>& r) {
        if (p >= target - kValueTol && s > secondary) {
            secondary = s;
            rules = r;
        }
    }
};

class Enumerator {
public:
    explicit Enumerator(const HistoryTree& tree) : tree_(tree) {}

    void run() {
        pending_ = tree_.roots();
        step(0.0, 0.0);
        selecting_ = true;
        best_i.target = max_i;
        best_j.target = max_j;
        step(0.0, 0.0);
    }

    std::size_t visited = 0;
    double max_i = -std::numeric_limits<double>::infinity();
    double max_j = -std::numeric_limits<double>::infinity();
    Best best_i, best_j;

private:
    void step(double vi, double vj) {
        if (pending_.empty()) {
            if (!selecting_) {
                ++visited;
                max_i = std::max(max_i, vi);
                max_j = std::max(max_j, vj);
            } else {
                best_i.offer(vi, vj, rules_);
                best_j.offer(vj, vi, rules_);
            }
            return;
        }
        const std::size_t id = pending_.back();
        pending_.pop_back();
        const Node& n = tree_.node(id);
        for (std::size_t a = 0; a < n.children.size(); ++a) {
            const auto& kids = n.children[a];
            pending_.insert(pending_.end(), kids.begin(), kids.end());
            rules_.emplace_back(id, static_cast<int>(a));
            step(vi + n.gain[0][a], vj + n.gain[1][a]);
            rules_.pop_back();
            pending_.resize(pending_.size() - kids.size());
        }
        pending_.push_back(id);
    }

    const HistoryTree& tree_;
    bool selecting_ = false;
    std::vector<std::size_t> pending_;
    std::vector<std::pair<std::size_t, int>> rules_;
};

HistoryPolicy to_policy(const HistoryTree& tree, const std::vector<std::pair<std::size_t, int>>& rules) {
    HistoryPolicy p;
    for (const auto& [id, a] : rules)
        p.rules.emplace_back(tree.node(id).history, a);
    std::sort(p.rules.begin(), p.rules.end());
    return p;
}

} // namespace

InvarianceVerdict epsilon_invariance_check(const DiscreteCPOMDP& m, ContextId ci, ContextId cj, double epsilon,
                                           int horizon, std::size_t cap) {
    const auto nc = static_cast<std::size_t>(m.num_contexts);
    if (ci.index >= nc || cj.index >= nc)
        throw std::out_of_range("epsilon_invariance_check: context out of range");
    if (horizon < 1)
        throw std::invalid_argument("epsilon_invariance_check: horizon must be at least 1");
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("epsilon_invariance_check: epsilon must be non-negative");

    const HistoryTree tree(m, ci, cj, horizon);
    std::size_t total = 1;
    for (std::size_t r : tree.roots()) {
        const std::size_t sub = count_policies(tree, r, cap);
        total = sub > (cap + 1) / total ? cap + 1 : total * sub;
        if (total > cap)
            throw EnumerationCapExceeded("policy enumeration exceeds the cap of " + std::to_string(cap));
    }

    Enumerator e(tree);
    e.run();

    InvarianceVerdict v;
    v.policies_checked = e.visited;
    v.best_i = e.max_i;
    v.best_j = e.max_j;
    // best_j.secondary is V_ci(pi_j*), best_i.secondary is V_cj(pi_i*)
    v.gap_i = std::max(0.0, e.max_i - e.best_j.secondary);
    v.gap_j = std::max(0.0, e.max_j - e.best_i.secondary);
    v.optimal_i = to_policy(tree, e.best_i.rules);
    v.optimal_j = to_policy(tree, e.best_j.rules);
    v.invariant = v.gap_i <= epsilon + kValueTol && v.gap_j <= epsilon + kValueTol;
    return v;
}

} // namespace cids
