#include "epf/economic.hpp"

#include "epf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epf {

void BatteryParams::validate() const {
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ArgumentError("battery: efficiency must be in (0,1]");
    if (!(e_min >= 0.0 && e_min <= e_max)) throw ArgumentError("battery: need 0 <= e_min <= e_max");
    if (!(e_init >= e_min && e_init <= e_max)) {
        throw ArgumentError("battery: initial energy " + csv::format_double(e_init) + " outside [" +
                            csv::format_double(e_min) + ", " + csv::format_double(e_max) + "]");
    }
    if (!(p_max > 0.0)) throw ArgumentError("battery: p_max must be positive");
    if (!(dt > 0.0)) throw ArgumentError("battery: dt must be positive");
    if (!(network_charge >= 0.0) || !std::isfinite(network_charge)) {
        throw ArgumentError("battery: network charge must be a finite non-negative value");
    }
}

BatteryMilp build_milp(const BatteryParams& params, const ProsumerDay& day, std::span<const double> prices) {
    params.validate();
    const std::size_t T = prices.size();
    if (T == 0) throw ArgumentError("battery: empty horizon");
    if (day.demand.size() != T || day.generation.size() != T) {
        throw ArgumentError("battery: horizon mismatch (" + std::to_string(T) + " prices, " +
                            std::to_string(day.demand.size()) + " demand, " + std::to_string(day.generation.size()) +
                            " generation)");
    }
    double peak = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        if (!(day.demand[t] >= 0.0) || !(day.generation[t] >= 0.0) || !std::isfinite(day.demand[t] + day.generation[t])) {
            throw ArgumentError("battery: demand and generation must be finite and non-negative (interval " +
                                std::to_string(t) + ")");
        }
        if (!std::isfinite(prices[t])) throw ArgumentError("battery: price missing at interval " + std::to_string(t));
        peak = std::max(peak, day.demand[t] + day.generation[t]);
    }

    BatteryMilp inst;
    inst.params = params;
    inst.day = day;
    inst.prices.assign(prices.begin(), prices.end());
    inst.m_power = params.p_max;
    inst.m_grid = peak + params.p_max * params.dt;

    using C = BatteryColumns;
    const auto n_struct = static_cast<Eigen::Index>(T) * C::kPerInterval;
    const auto n_slack = static_cast<Eigen::Index>(4 * T + 1);
    const auto n_cols = n_struct + n_slack;
    const auto n_rows = static_cast<Eigen::Index>(7 * T + 1);

    lp::Problem& lp = inst.problem.lp;
    lp.A = Eigen::MatrixXd::Zero(n_rows, n_cols);
    lp.b = Eigen::VectorXd::Zero(n_rows);
    lp.c = Eigen::VectorXd::Zero(n_cols);
    lp.lower = Eigen::VectorXd::Zero(n_cols);
    lp.upper = Eigen::VectorXd::Constant(n_cols, lp::kInf);

    const double dt = params.dt, M = inst.m_power, M2 = inst.m_grid;
    Eigen::Index row = 0, slack = n_struct;
    for (std::size_t t = 0; t < T; ++t) {
        const auto E = C::at(t, C::energy), P = C::at(t, C::power), ch = C::at(t, C::charge),
                   dis = C::at(t, C::discharge), np = C::at(t, C::import), nm = C::at(t, C::export_),
                   pb = C::at(t, C::charge_on), nb = C::at(t, C::import_on);
        lp.lower[E] = params.e_min;
        lp.upper[E] = params.e_max;
        lp.lower[P] = -params.p_max;
        lp.upper[P] = params.p_max;
        lp.upper[ch] = lp.upper[dis] = params.p_max;
        lp.upper[np] = lp.upper[nm] = M2;
        lp.upper[pb] = lp.upper[nb] = 1.0;
        inst.problem.integer_columns.push_back(pb);
        inst.problem.integer_columns.push_back(nb);

        lp.c[np] = prices[t] + params.network_charge;
        lp.c[nm] = -prices[t];

        // Stored energy.
        lp.A(row, E) = 1.0;
        if (t > 0) lp.A(row, C::at(t - 1, C::energy)) = -1.0;
        lp.A(row, ch) = -dt;
        lp.A(row, dis) = dt / params.efficiency;
        lp.b[row++] = t == 0 ? params.e_init : 0.0;
        // Net battery power.
        lp.A(row, P) = 1.0;
        lp.A(row, ch) = -1.0;
        lp.A(row, dis) = 1.0;
        ++row;
        // Charge / discharge exclusivity.
        lp.A(row, ch) = 1.0;
        lp.A(row, pb) = -M;
        lp.A(row++, slack++) = 1.0;
        lp.A(row, dis) = 1.0;
        lp.A(row, pb) = M;
        lp.A(row, slack++) = 1.0;
        lp.b[row++] = M;
        // Energy balance at the meter.
        lp.A(row, P) = dt;
        lp.A(row, np) = -1.0;
        lp.A(row, nm) = 1.0;
        lp.b[row++] = day.generation[t] - day.demand[t];
        // Import / export exclusivity.
        lp.A(row, np) = 1.0;
        lp.A(row, nb) = -M2;
        lp.A(row++, slack++) = 1.0;
        lp.A(row, nm) = 1.0;
        lp.A(row, nb) = M2;
        lp.A(row, slack++) = 1.0;
        lp.b[row++] = M2;
    }
    // At most one full cycle of charging per day.
    for (std::size_t t = 0; t < T; ++t) lp.A(row, C::at(t, C::charge)) = dt;
    lp.A(row, slack++) = 1.0;
    lp.b[row++] = params.e_max;
    return inst;
}

BatteryPlan solve_battery(const BatteryMilp& instance, const milp::Options& options) {
    using C = BatteryColumns;
    const std::size_t T = instance.horizon();
    milp::Options opts = options;
    if (!opts.propose_assignment) {
        // Set each indicator from whichever of its two flows is larger.
        opts.propose_assignment = [T](const Eigen::VectorXd& x) {
            std::vector<double> out;
            for (std::size_t t = 0; t < T; ++t) {
                out.push_back(x[C::at(t, C::charge)] >= x[C::at(t, C::discharge)] ? 1.0 : 0.0);
                out.push_back(x[C::at(t, C::import)] >= x[C::at(t, C::export_)] ? 1.0 : 0.0);
            }
            return out;
        };
    }
    const auto res = milp::solve(instance.problem, opts);
    if (res.status == milp::Status::infeasible) throw SolverError("battery schedule is infeasible");
    if (res.status == milp::Status::unknown) throw SolverError("battery schedule: no feasible plan found within limits");
    BatteryPlan plan;
    auto column = [&](C::Offset v) {
        std::vector<double> out(T);
        for (std::size_t t = 0; t < T; ++t) out[t] = res.x[C::at(t, v)];
        return out;
    };
    plan.energy = column(C::energy);
    plan.power = column(C::power);
    plan.charge = column(C::charge);
    plan.discharge = column(C::discharge);
    plan.import = column(C::import);
    plan.export_ = column(C::export_);
    plan.charge_on = column(C::charge_on);
    plan.import_on = column(C::import_on);
    plan.objective = res.objective;
    plan.status = res.status;
    plan.gap = res.gap;
    plan.nodes = res.nodes;
    return plan;
}

FeasibilityReport check_plan(const BatteryParams& params, const ProsumerDay& day, const BatteryPlan& plan,
                             double tol) {
    FeasibilityReport rep;
    auto check = [&](double violation, const std::string& what, std::size_t t) {
        rep.max_violation = std::max(rep.max_violation, violation);
        if (violation > tol) {
            std::ostringstream msg;
            msg << what << " at interval " << t << " violated by " << violation;
            rep.violations.push_back(msg.str());
        }
    };
    const std::size_t T = plan.horizon();
    if (day.horizon() != T || plan.power.size() != T || plan.import.size() != T) {
        rep.violations.push_back("plan and day have different horizons");
        rep.max_violation = lp::kInf;
        return rep;
    }
    double previous = params.e_init, charged = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const double E = plan.energy[t], P = plan.power[t], ch = plan.charge[t], dis = plan.discharge[t];
        const double np = plan.import[t], nm = plan.export_[t];
        check(std::abs(E - previous - (ch - dis / params.efficiency) * params.dt), "energy recursion", t);
        check(std::abs(P - (ch - dis)), "power split", t);
        check(std::max(params.e_min - E, E - params.e_max), "energy bounds", t);
        check(std::abs(P) - params.p_max, "power limit", t);
        check(std::max({-ch, -dis, -np, -nm}), "non-negativity", t);
        check(std::abs(day.demand[t] - day.generation[t] + P * params.dt - (np - nm)), "energy balance", t);
        for (double b : {plan.charge_on[t], plan.import_on[t]}) check(std::min(std::abs(b), std::abs(b - 1.0)), "binary", t);
        check(std::min(ch, dis), "simultaneous charge and discharge", t);
        check(std::min(np, nm), "simultaneous import and export", t);
        const bool charging = plan.charge_on[t] > 0.5, importing = plan.import_on[t] > 0.5;
        check(charging ? dis : ch, "charge indicator", t);
        check(importing ? nm : np, "import indicator", t);
        charged += ch * params.dt;
        previous = E;
    }
    check(charged - params.e_max, "daily cycle limit", T);
    return rep;
}

double ground_truth_cost(const BatteryPlan& plan, std::span<const double> prices, double network_charge) {
    if (prices.size() != plan.horizon()) {
        throw ArgumentError("ground truth cost: " + std::to_string(prices.size()) + " prices for a " +
                            std::to_string(plan.horizon()) + "-interval plan");
    }
    double cost = 0.0;
    for (std::size_t t = 0; t < prices.size(); ++t) {
        cost += prices[t] * (plan.import[t] - plan.export_[t]) + network_charge * plan.import[t];
    }
    return cost;
}

double cdf_quantile(std::span<const double> levels, std::span<const double> values, double u) {
    if (u <= levels.front()) return values.front();
    if (u >= levels.back()) return values.back();
    std::size_t i = 0;
    while (i + 2 < levels.size() && levels[i + 1] <= u) ++i;
    const double w = (u - levels[i]) / (levels[i + 1] - levels[i]);
    return values[i] + w * (values[i + 1] - values[i]);
}

PriceScenarios expected_price_from_cdf(const QuantileSurface& surface, std::size_t n_samples) {
    if (n_samples == 0) throw ArgumentError("price scenarios: need at least one sample");
    PriceScenarios out;
    out.probability.assign(n_samples, 1.0 / static_cast<double>(n_samples));
    for (std::size_t r = 0; r < surface.rows(); ++r) {
        const auto row = surface.row(r);
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] < row[c - 1]) {
                throw ValidationError("price scenarios: quantiles cross at " + format_timestamp(surface.time_at(r)));
            }
        }
        std::vector<double> samples(n_samples);
        double expected = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            const double u = (2.0 * static_cast<double>(s) + 1.0) / (2.0 * static_cast<double>(n_samples));
            samples[s] = cdf_quantile(surface.levels, row, u);
            expected += out.probability[s] * samples[s];
        }
        out.samples.push_back(std::move(samples));
        out.expected.push_back(expected);
    }
    return out;
}

std::vector<double> take_every(std::span<const double> values, std::size_t stride, std::size_t offset) {
    if (stride == 0) throw ArgumentError("take_every: stride must be positive");
    std::vector<double> out;
    for (std::size_t i = offset; i < values.size(); i += stride) out.push_back(values[i]);
    return out;
}

std::vector<ProsumerRecord> load_prosumer_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto ct = table.column("timestamp"), cd = table.column("demand_kwh"), cg = table.column("generation_kwh");
    std::vector<ProsumerRecord> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
        ProsumerRecord rec;
        rec.time = parse_timestamp(row[ct]);
        rec.demand_kwh = csv::parse_double(row[cd], where);
        rec.generation_kwh = csv::parse_double(row[cg], where);
        if (!(rec.demand_kwh >= 0.0) || !(rec.generation_kwh >= 0.0)) {
            throw ValidationError(where + ": demand and generation must be non-negative");
        }
        if (!out.empty() && rec.time <= out.back().time) {
            throw ValidationError(where + ": timestamps must be strictly increasing");
        }
        out.push_back(rec);
    }
    return out;
}

void write_plan_csv(const std::filesystem::path& path, Timestamp start, std::chrono::seconds step,
                    const BatteryPlan& plan) {
    auto out = csv::open_output(path);
    out << "timestamp,energy_kwh,power_kw,charge_kw,discharge_kw,import_kwh,export_kwh,charge_on,import_on\n";
    for (std::size_t t = 0; t < plan.horizon(); ++t) {
        out << format_timestamp(start + step * static_cast<long>(t));
        for (double v : {plan.energy[t], plan.power[t], plan.charge[t], plan.discharge[t], plan.import[t],
                         plan.export_[t], plan.charge_on[t], plan.import_on[t]}) {
            out << ',' << csv::format_double(v);
        }
        out << '\n';
    }
}

}  // namespace epf
