// SPDX-License-Identifier: MIT
// attnopt command line tool.
#include "attnopt/attention.hpp"
#include "attnopt/baselines.hpp"
#include "attnopt/constructions.hpp"
#include "attnopt/harness.hpp"
#include "attnopt/ranking.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace attnopt;
using nlohmann::json;

namespace {

std::vector<RewardFunction> parse_rewards(const std::string& list) {
    std::vector<RewardFunction> out;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
        switch (parse_reward_kind(name)) {
            case RewardKind::Logistic: out.push_back(RewardFunction::logistic()); break;
            case RewardKind::Relu: out.push_back(RewardFunction::relu()); break;
            case RewardKind::LeakyRelu: out.push_back(RewardFunction::leaky_relu()); break;
            case RewardKind::Softplus: out.push_back(RewardFunction::softplus()); break;
            case RewardKind::TanhShifted: out.push_back(RewardFunction::tanh_shifted()); break;
            case RewardKind::PiecewiseLinear: out.push_back(RewardFunction::linear(1.0)); break;
            case RewardKind::Exponential: out.push_back(RewardFunction::exponential()); break;
        }
    }
    if (out.empty()) throw ValidationError("empty reward list");
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError(fmt::format("cannot write '{}'", path));
    return f;
}

void emit(const json& doc, const std::string& path) {
    if (path.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    open_out(path) << doc.dump(2) << '\n';
}

std::vector<int> load_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("malformed candidates file: {}", e.what()));
    }
    const json& ids = doc.is_array() ? doc : doc.value("ids", json());
    if (!ids.is_array()) throw ParseError("candidates file needs an 'ids' array");
    std::vector<int> out;
    for (const auto& v : ids) {
        if (!v.is_number_integer()) throw ParseError("candidate ids must be integers");
        out.push_back(v.get<int>());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void check_ids(const Instance& inst, const std::vector<int>& ids) {
    if (ids.empty()) throw ValidationError("empty candidate set");
    for (std::size_t a = 0; a < ids.size(); ++a) {
        if (ids[a] < 0 || ids[a] >= inst.n) throw ValidationError(fmt::format("candidate id {} out of range", ids[a]));
        if (a > 0 && ids[a] == ids[a - 1]) throw ValidationError("duplicate candidate id");
    }
}

json stats_json(const RankingStats& s) {
    return {{"small_tuples", s.small_tuples},   {"lambda_tuples", s.lambda_tuples},
            {"aux_problems", s.aux_problems},   {"oracle_calls", s.oracle_calls},
            {"scenario_two", s.scenario_two},   {"lp_scenario_two", s.lp_scenario_two},
            {"lp_calls", s.lp_calls},           {"lp_failures", s.lp_failures},
            {"slack_violations", s.slack_violations}, {"max_fractional", s.max_fractional},
            {"lambda", s.lambda},               {"lambda_prime", s.lambda_prime},
            {"budget_mode", s.budget_mode},     {"guarantee_suspended", s.guarantee_suspended}};
}

void write_trace(const std::string& path, const std::string& method, const std::vector<CandidateRecord>& trace) {
    if (path.empty()) return;
    auto f = open_out(path);
    write_trace_csv(f, trace_rows(method, trace));
}

RankingParams ranking_params(double eps, std::optional<long> budget, std::optional<int> lambda,
                             std::optional<int> lambda_prime, double work_cap) {
    RankingParams p;
    p.epsilon = eps;
    p.budget = budget;
    p.lambda = lambda;
    p.lambda_prime = lambda_prime;
    p.work_cap = work_cap;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set selection under single-layer self-attention objectives"};
    app.require_subcommand(1);

    std::string instance_path, out_path, trace_path, candidates_path;
    double epsilon = 0.1;
    std::optional<long> budget;
    std::uint64_t seed = 1;
    std::string backend_name = "exact";
    std::optional<int> lambda, lambda_prime;
    double work_cap = 2e6;

    GenSpec gen;
    std::string rewards = "logistic";
    auto add_gen_options = [&](CLI::App* sc) {
        sc->add_option("--n", gen.n, "Items");
        sc->add_option("--k", gen.k, "Cardinality");
        sc->add_option("--dkq", gen.d_kq, "Query/key dimension");
        sc->add_option("--dv", gen.d_v, "Value dimension");
        sc->add_option("--q-clusters", gen.q_clusters, "Query clusters");
        sc->add_option("--k-clusters", gen.k_clusters, "Key clusters");
        sc->add_option("--spread", gen.spread, "Per-coordinate spread around centers");
        sc->add_option("--center-scale", gen.center_scale, "Typical center norm");
        sc->add_option("--rewards", rewards, "Comma list of reward kinds");
        sc->add_flag("--context", gen.user_from_context, "User vector from context items");
        sc->add_option("--context-size", gen.context_size, "Context items");
    };
    auto add_rank_options = [&](CLI::App* sc) {
        sc->add_option("--epsilon", epsilon, "Accuracy parameter")->check(CLI::PositiveNumber);
        sc->add_option("--budget", budget, "Candidate budget");
        sc->add_option("--lambda", lambda, "Override tuple size");
        sc->add_option("--lambda-prime", lambda_prime, "Override oracle enumeration size");
        sc->add_option("--work-cap", work_cap, "Work estimate above which budget mode is used");
        sc->add_option("--trace", trace_path, "Candidate trace CSV");
    };

    auto* gen_cmd = app.add_subcommand("gen", "Generate a clustered synthetic instance");
    add_gen_options(gen_cmd);
    gen_cmd->add_option("--seed", seed, "Seed");
    gen_cmd->add_option("--out", out_path, "Instance file")->required();

    auto* solve_cmd = app.add_subcommand("solve", "Retrieval and ranking");
    solve_cmd->add_option("--instance", instance_path, "Instance file")->required();
    solve_cmd->add_option("--backend", backend_name, "exact | lifted-tree");
    solve_cmd->add_option("--out", out_path, "Selection JSON (stdout when empty)");
    add_rank_options(solve_cmd);

    auto* retrieve_cmd = app.add_subcommand("retrieve", "Phase one only");
    retrieve_cmd->add_option("--instance", instance_path, "Instance file")->required();
    retrieve_cmd->add_option("--epsilon", epsilon, "Accuracy parameter")->check(CLI::PositiveNumber);
    retrieve_cmd->add_option("--backend", backend_name, "exact | lifted-tree");
    retrieve_cmd->add_option("--out", out_path, "Candidates JSON (stdout when empty)");

    auto* rank_cmd = app.add_subcommand("rank", "Phase two on a candidate set");
    rank_cmd->add_option("--instance", instance_path, "Instance file")->required();
    rank_cmd->add_option("--candidates", candidates_path, "Candidates JSON")->required();
    rank_cmd->add_option("--out", out_path, "Selection JSON (stdout when empty)");
    add_rank_options(rank_cmd);

    std::string method = "beam";
    std::optional<int> size;
    auto* base_cmd = app.add_subcommand("baseline", "Baseline methods");
    base_cmd->add_option("--method", method, "beam | greedy | knn | brute")
        ->check(CLI::IsMember({"beam", "greedy", "knn", "brute"}));
    base_cmd->add_option("--instance", instance_path, "Instance file")->required();
    base_cmd->add_option("--candidates", candidates_path, "Candidates JSON (all items when empty)");
    base_cmd->add_option("--budget", budget, "Beam tuples");
    base_cmd->add_option("--size", size, "k-NN retrieval size (k when empty)");
    base_cmd->add_option("--out", out_path, "Selection JSON (stdout when empty)");
    base_cmd->add_option("--trace", trace_path, "Candidate trace CSV");

    int instances = 10;
    std::vector<long> budgets{5, 10, 20};
    bool timing = false;
    auto* bench_cmd = app.add_subcommand("bench", "Four-way method comparison on generated instances");
    add_gen_options(bench_cmd);
    bench_cmd->add_option("--seed", seed, "First seed");
    bench_cmd->add_option("--instances", instances, "Instances");
    bench_cmd->add_option("--budgets", budgets, "Candidate budgets")->delimiter(',');
    bench_cmd->add_option("--epsilon", epsilon, "Accuracy parameter")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--lambda", lambda, "Override tuple size");
    bench_cmd->add_option("--lambda-prime", lambda_prime, "Override oracle enumeration size");
    bench_cmd->add_flag("--timing", timing, "Record wall time (breaks byte-identical output)");
    bench_cmd->add_option("--out", out_path, "Output prefix")->required();

    auto* verify_cmd = app.add_subcommand("verify", "Invariant suite on one instance");
    verify_cmd->add_option("--instance", instance_path, "Instance file")->required();
    verify_cmd->add_option("--epsilon", epsilon, "Accuracy parameter")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--seed", seed, "Seed");

    std::string kind = "variety";
    int cn = 3, ck = 2, cd = 2;
    double beta = 1.0, h_scale = 0.25;
    std::vector<double> m_values{4, 6, 8, 10};
    auto* construct_cmd = app.add_subcommand("construct", "Build transformers for utility models");
    construct_cmd->add_option("kind", kind, "variety | halo")->check(CLI::IsMember({"variety", "halo"}))->required();
    construct_cmd->add_option("--n", cn, "Items");
    construct_cmd->add_option("--k", ck, "Sequence length (variety)");
    construct_cmd->add_option("--d", cd, "Embedding dimension");
    construct_cmd->add_option("--beta", beta, "Variety strength");
    construct_cmd->add_option("--h-scale", h_scale, "Interaction magnitude (halo)");
    construct_cmd->add_option("--m-values", m_values, "Precision parameters")->delimiter(',');
    construct_cmd->add_option("--seed", seed, "Seed");
    construct_cmd->add_option("--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen_cmd) {
            gen.seed = seed;
            gen.rewards = parse_rewards(rewards);
            save_instance(generate(gen), out_path);
        } else if (*solve_cmd) {
            const auto inst = load_instance(instance_path);
            SolveParams p;
            p.epsilon = epsilon;
            p.backend = parse_ann_backend(backend_name);
            p.ranking = ranking_params(epsilon, budget, lambda, lambda_prime, work_cap);
            const auto rep = solve(inst, p);
            emit({{"indices", rep.selection.indices},
                  {"objective", rep.selection.objective},
                  {"objective_w_prime", rep.objective_p_prime},
                  {"candidates", rep.candidates.size()},
                  {"delta", std::isfinite(rep.delta) ? json(rep.delta) : json(nullptr)},
                  {"eps_ann", rep.eps_ann},
                  {"cells", rep.cells},
                  {"r", rep.r},
                  {"gamma", rep.gamma},
                  {"gamma_bound", rep.gamma_bound},
                  {"candidates_evaluated", rep.trace.size()},
                  {"stats", stats_json(rep.stats)}},
                 out_path);
            write_trace(trace_path, "ours", rep.trace);
        } else if (*retrieve_cmd) {
            const auto inst = load_instance(instance_path);
            const auto rep = retrieve(inst, epsilon, parse_ann_backend(backend_name));
            emit({{"ids", rep.candidates.ids},
                  {"delta", std::isfinite(rep.delta) ? json(rep.delta) : json(nullptr)},
                  {"eps_ann", rep.eps_ann},
                  {"q_clusters", rep.partition.q_clusters()},
                  {"k_clusters", rep.partition.k_clusters()},
                  {"cells", rep.partition.cells.size()}},
                 out_path);
        } else if (*rank_cmd) {
            const auto inst = load_instance(instance_path);
            const auto ids = load_candidates(candidates_path);
            check_ids(inst, ids);
            const auto part = build_cover_partition(inst, choose_delta(inst, epsilon));
            const auto res =
                rank_candidates(inst, ids, part, ranking_params(epsilon, budget, lambda, lambda_prime, work_cap));
            emit({{"indices", res.selection.indices},
                  {"objective", res.selection.objective},
                  {"objective_w_prime", res.objective_p_prime},
                  {"candidates_evaluated", res.trace.size()},
                  {"stats", stats_json(res.stats)}},
                 out_path);
            write_trace(trace_path, "ours", res.trace);
        } else if (*base_cmd) {
            const auto inst = load_instance(instance_path);
            std::vector<int> ids;
            if (candidates_path.empty()) {
                ids.resize(inst.n);
                std::iota(ids.begin(), ids.end(), 0);
            } else {
                ids = load_candidates(candidates_path);
                check_ids(inst, ids);
            }
            MethodResult res;
            if (method == "beam") {
                res = beam_search(PoolObjective(inst, ids), beam_tuples(inst.k, budget.value_or(16)));
            } else if (method == "greedy") {
                res = greedy(PoolObjective(inst, ids));
            } else if (method == "knn") {
                const auto top = knn_retrieval(inst, size.value_or(inst.k));
                res.selection.indices = knn_retrieval(inst, std::min<int>(inst.k, static_cast<int>(top.size())));
                res.selection.objective = objective_set(inst, res.selection.indices);
                res.trace.push_back({res.selection.indices, res.selection.objective, 0.0});
                emit({{"retrieved", top}, {"indices", res.selection.indices}, {"objective", res.selection.objective}},
                     out_path);
                write_trace(trace_path, method, res.trace);
                return 0;
            } else {
                res.selection = brute_force(PoolObjective(inst, ids));
                res.trace.push_back({res.selection.indices, res.selection.objective, 0.0});
            }
            emit({{"indices", res.selection.indices},
                  {"objective", res.selection.objective},
                  {"candidates_evaluated", res.trace.size()}},
                 out_path);
            write_trace(trace_path, method, res.trace);
        } else if (*bench_cmd) {
            BenchSpec spec;
            gen.seed = seed;
            gen.rewards = parse_rewards(rewards);
            spec.gen = gen;
            spec.instances = instances;
            spec.budgets = budgets;
            spec.epsilon = epsilon;
            spec.ranking.lambda = lambda;
            spec.ranking.lambda_prime = lambda_prime;
            spec.timing = timing;
            const auto rep = bench(spec);
            {
                auto f = open_out(out_path + "_traces.csv");
                write_bench_traces(f, rep);
            }
            {
                auto f = open_out(out_path + "_summary.csv");
                write_bench_summary(f, rep);
            }
            {
                auto f = open_out(out_path + "_pairs.csv");
                write_bench_pairs(f, rep, kOurs, kKnnBeam);
            }
        } else if (*verify_cmd) {
            const auto inst = load_instance(instance_path);
            const auto rep = verify(inst, epsilon, seed);
            for (const auto& c : rep.checks)
                std::cout << fmt::format("{:<22} {}  {}\n", c.name, c.ok ? "PASS" : "FAIL", c.detail);
            return rep.ok() ? 0 : 1;
        } else if (*construct_cmd) {
            std::filesystem::create_directories(out_path);
            std::ofstream csv = open_out((std::filesystem::path(out_path) / "errors.csv").string());
            csv << "M,max_error,bound\n";
            BuiltTransformer last;
            for (double M : m_values) {
                if (kind == "variety") {
                    const auto model = random_variety_model(cn, ck, cd, beta, seed);
                    last = build_variety_transformer(model, M);
                    csv << fmt::format("{},{:.17g},{:.17g}\n", M, variety_max_error(model, last),
                                       variety_precision_bound(model, M));
                } else {
                    const auto model = random_halo_model(cn, cd, h_scale, seed);
                    last = build_halo_transformer(model, M);
                    csv << fmt::format("{},{:.17g},{:.17g}\n", M, halo_max_error(model, last),
                                       halo_precision_bound(model, M, last.shift));
                }
            }
            for (std::size_t h = 0; h < last.heads.size(); ++h)
                save_instance(last.heads[h], (std::filesystem::path(out_path) / fmt::format("head_{}.json", h)).string());
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
