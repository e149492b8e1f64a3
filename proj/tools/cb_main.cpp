#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cb/bandit.hpp"
#include "cb/datagen.hpp"
#include "cb/errors.hpp"
#include "cb/eval.hpp"
#include "cb/movielens.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 ok, 2 configuration, 3 data (parse/schema/io), 4 numeric.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct MlPaths {
    std::string dir;
    std::string users, items, ratings;

    void resolve() {
        if (!dir.empty()) {
            if (users.empty()) users = (fs::path(dir) / "u.user").string();
            if (items.empty()) items = (fs::path(dir) / "u.item").string();
            if (ratings.empty()) ratings = (fs::path(dir) / "u.data").string();
        }
        if (users.empty() || items.empty() || ratings.empty())
            throw cb::config_error("MovieLens input requires --dir or --users/--items/--ratings");
    }
    bool any() const { return !dir.empty() || !users.empty() || !items.empty() || !ratings.empty(); }
};

cb::ml100k::ContextFields parse_context_fields(const std::string& spec) {
    cb::ml100k::ContextFields fields;
    fields.age = fields.sex = fields.zip = fields.occupation = false;
    bool any = false;
    for (const std::string& name : cb::detail::split(spec, ',')) {
        const auto token = cb::detail::lower(cb::detail::trim(name));
        if (token.empty()) continue;
        if (token == "age")
            fields.age = true;
        else if (token == "sex")
            fields.sex = true;
        else if (token == "zip")
            fields.zip = true;
        else if (token == "occupation")
            fields.occupation = true;
        else
            throw cb::config_error("unknown context field '" + token +
                                   "' (expected age, sex, zip, occupation)");
        any = true;
    }
    if (!any) throw cb::config_error("--context-fields must name at least one field");
    return fields;
}

struct MlData {
    cb::ContextSchema schema;
    std::vector<cb::InteractionRecord> records;
    std::size_t joined_rows = 0;
    std::size_t dropped = 0;
};

MlData load_movielens(MlPaths paths, const cb::ml100k::ContextFields& fields,
                      const std::string& export_csv) {
    paths.resolve();
    const auto users = cb::ml100k::parse_users(paths.users);
    const auto movies = cb::ml100k::parse_items(paths.items);
    const auto ratings = cb::ml100k::parse_ratings(paths.ratings);
    const auto table = cb::ml100k::join_and_engineer(users, movies, ratings);
    if (!export_csv.empty()) cb::ml100k::write_inspection_csv(table, export_csv);
    MlData data{cb::ml100k::make_schema(table, fields),
                cb::ml100k::explode_by_genre(table, fields), table.rows.size(), table.dropped};
    return data;
}

void print_report(const cb::AlgoReport& report) {
    std::cout << "algorithm " << cb::algo_name(report.algo) << "\n"
              << "entries " << report.log.entries.size() << "\n"
              << "cold_starts " << report.log.cold_start_count << "\n";
    if (report.avg_accuracy)
        std::cout << "average_accuracy " << cb::detail::fmt6(*report.avg_accuracy) << "\n";
    if (report.rmse_value) std::cout << "rmse " << cb::detail::fmt6(*report.rmse_value) << "\n";
    if (!report.rounds.empty()) {
        std::cout << "rmse_rounds";
        for (double r : report.rounds) std::cout << ' ' << cb::detail::fmt6(r);
        std::cout << "\n";
    }
}

void print_comparison(const cb::Comparison& cmp) {
    std::cout << "evaluated_positions " << cmp.positions.size() << "\n";
    for (const cb::AlgoReport& r : cmp.reports) {
        std::cout << cb::algo_name(r.algo);
        if (r.avg_accuracy)
            std::cout << " average_accuracy " << cb::detail::fmt6(*r.avg_accuracy);
        if (r.rmse_value) std::cout << " rmse " << cb::detail::fmt6(*r.rmse_value);
        if (!r.rounds.empty()) {
            std::cout << " rounds";
            for (double v : r.rounds) std::cout << ' ' << cb::detail::fmt6(v);
        }
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual-bandit reward prediction experiments"};
    app.require_subcommand(1);

    // --- gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate the synthetic drifting click dataset");
    std::int64_t gen_rows = 5000;
    std::uint64_t gen_seed = 42;
    std::string gen_out, gen_config;
    gen->add_option("--rows", gen_rows, "Number of rows")->capture_default_str();
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--config", gen_config, "Generator config file (flags override rows/seed)");

    // --- shared protocol flags ----------------------------------------------
    struct ProtoFlags {
        std::size_t warmup = 500;
        std::size_t train = 500;
        std::size_t window = 20;
        std::size_t round_size = 1000;
        std::size_t rounds = 10;
        double eta = 0.01;
        double l2 = 1e-4;
        int rating_tolerance = 0;
        std::string out = ".";
    };
    const auto add_proto = [](CLI::App* cmd, ProtoFlags& f, bool with_warmup, bool with_train) {
        if (with_warmup)
            cmd->add_option("--warmup", f.warmup, "Records fit before scoring (online algorithms)")
                ->capture_default_str();
        if (with_train)
            cmd->add_option("--train", f.train, "Training-set size (static algorithms)")
                ->capture_default_str();
        cmd->add_option("--window", f.window, "Accuracy window size")->capture_default_str();
        cmd->add_option("--round-size", f.round_size, "Entries per RMSE round")
            ->capture_default_str();
        cmd->add_option("--rounds", f.rounds, "Maximum RMSE rounds")->capture_default_str();
        cmd->add_option("--eta", f.eta, "SGD learning rate")->capture_default_str();
        cmd->add_option("--l2", f.l2, "SGD L2 regularization")->capture_default_str();
        cmd->add_option("--rating-tolerance", f.rating_tolerance,
                        "Stars of slack when scoring rating accuracy")
            ->capture_default_str();
        cmd->add_option("--out", f.out, "Report output directory")->capture_default_str();
    };
    const auto to_params = [](const ProtoFlags& f, std::size_t train_n) {
        cb::ProtocolParams p;
        p.train_n = train_n;
        p.window_size = f.window;
        p.round_size = f.round_size;
        p.rounds = f.rounds;
        p.eta = f.eta;
        p.l2 = f.l2;
        p.rating_tolerance = f.rating_tolerance;
        return p;
    };

    // --- run -----------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run one algorithm over a synthetic click dataset");
    std::string run_algo, run_data;
    ProtoFlags run_flags;
    run->add_option("--algo", run_algo,
                    "static-tree | static-ols | online-sgd | bandit-array")
        ->required();
    run->add_option("--data", run_data, "Dataset CSV (gender,age,recommendation,reward)")
        ->required();
    add_proto(run, run_flags, true, true);

    // --- movielens -----------------------------------------------------------
    auto* ml = app.add_subcommand("movielens", "Bandit-array run over the MovieLens-100K data");
    MlPaths ml_paths;
    ProtoFlags ml_flags;
    std::size_t ml_limit = 2500;
    std::string ml_fields = "age,sex,zip";
    std::string ml_export;
    ml->add_option("--dir", ml_paths.dir, "Directory holding u.user, u.item, u.data");
    ml->add_option("--users", ml_paths.users, "u.user path");
    ml->add_option("--items", ml_paths.items, "u.item path");
    ml->add_option("--ratings", ml_paths.ratings, "u.data path");
    ml->add_option("--limit", ml_limit, "Records to evaluate after warmup (0 = all)")
        ->capture_default_str();
    ml->add_option("--context-fields", ml_fields, "Comma list of age,sex,zip,occupation")
        ->capture_default_str();
    ml->add_option("--export", ml_export, "Write the joined/exploded inspection CSV here");
    add_proto(ml, ml_flags, true, false);

    // --- compare ---------------------------------------------------------------
    auto* cmp = app.add_subcommand("compare", "Compare algorithms under the shared protocol");
    std::string cmp_data, cmp_algos;
    MlPaths cmp_paths;
    ProtoFlags cmp_flags;
    cmp_flags.train = 1000;
    std::size_t cmp_limit = 0;
    std::string cmp_fields = "age,sex,zip";
    cmp->add_option("--data", cmp_data, "Synthetic dataset CSV (click task)");
    cmp->add_option("--dir", cmp_paths.dir, "MovieLens directory (rating task)");
    cmp->add_option("--users", cmp_paths.users, "u.user path");
    cmp->add_option("--items", cmp_paths.items, "u.item path");
    cmp->add_option("--ratings", cmp_paths.ratings, "u.data path");
    cmp->add_option("--algos", cmp_algos, "Comma list (default depends on the task)");
    cmp->add_option("--limit", cmp_limit, "Records to evaluate after training (0 = all)")
        ->capture_default_str();
    cmp->add_option("--context-fields", cmp_fields, "Comma list of age,sex,zip,occupation");
    add_proto(cmp, cmp_flags, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            cb::datagen::GeneratorConfig config =
                gen_config.empty() ? cb::datagen::default_config()
                                   : cb::datagen::read_config_file(gen_config);
            if (gen->count("--rows") > 0 || gen_config.empty()) config.n_rows = gen_rows;
            if (gen->count("--seed") > 0 || gen_config.empty()) config.seed = gen_seed;
            cb::datagen::validate(config);
            const auto records = cb::datagen::generate(config);
            cb::datagen::write_csv(records, gen_out);
            std::cout << "wrote " << records.size() << " rows to " << gen_out << "\n";
        } else if (run->parsed()) {
            const cb::Algo algo = cb::algo_from_name(run_algo);
            const auto records = cb::datagen::read_csv(run_data);
            const cb::ContextSchema& schema = cb::datagen::schema();
            const bool is_static = algo == cb::Algo::static_tree || algo == cb::Algo::static_ols;
            const std::size_t train_n = is_static ? run_flags.train : run_flags.warmup;
            const cb::ProtocolParams params = to_params(run_flags, train_n);

            cb::PredictionLog log;
            if (is_static) {
                log = cb::run_static(schema, records, cb::RewardKind::click, algo, params);
            } else if (algo == cb::Algo::online_sgd) {
                log = cb::run_single_sgd(schema, records, cb::RewardKind::click, params);
            } else {
                if (records.size() <= params.train_n)
                    throw cb::config_error("dataset holds " + std::to_string(records.size()) +
                                           " records, need more than warmup = " +
                                           std::to_string(params.train_n));
                cb::ArmLearnerArray array(schema, cb::RewardKind::click, params.eta, params.l2);
                log = array.run_prequential(records, params.train_n);
            }
            const cb::AlgoReport report = cb::make_report(algo, std::move(log), params);
            cb::emit_report(report, run_flags.out);
            print_report(report);
        } else if (ml->parsed()) {
            const auto fields = parse_context_fields(ml_fields);
            MlData data = load_movielens(ml_paths, fields, ml_export);
            std::cout << "joined_rows " << data.joined_rows << "\n"
                      << "dropped " << data.dropped << "\n"
                      << "exploded_records " << data.records.size() << "\n";
            if (ml_limit > 0) {
                const std::size_t keep = std::min(data.records.size(),
                                                  ml_flags.warmup + ml_limit);
                data.records.resize(keep);
            }
            if (data.records.size() <= ml_flags.warmup)
                throw cb::config_error("exploded stream holds " +
                                       std::to_string(data.records.size()) +
                                       " records, need more than warmup = " +
                                       std::to_string(ml_flags.warmup));
            const cb::ProtocolParams params = to_params(ml_flags, ml_flags.warmup);
            cb::ArmLearnerArray array(data.schema, cb::RewardKind::rating, params.eta, params.l2);
            cb::PredictionLog log = array.run_prequential(data.records, params.train_n);
            std::cout << "arms " << array.known_arms().size() << "\n";
            const cb::AlgoReport report =
                cb::make_report(cb::Algo::bandit_array, std::move(log), params);
            cb::emit_report(report, ml_flags.out);
            print_report(report);
        } else if (cmp->parsed()) {
            const bool synth = !cmp_data.empty();
            if (synth == cmp_paths.any())
                throw cb::config_error("compare needs --data or MovieLens paths, not both");

            cb::RewardKind task = synth ? cb::RewardKind::click : cb::RewardKind::rating;
            std::vector<cb::Algo> algos;
            if (!cmp_algos.empty()) {
                for (const std::string& name : cb::detail::split(cmp_algos, ','))
                    algos.push_back(cb::algo_from_name(cb::detail::trim(name)));
            } else if (task == cb::RewardKind::click) {
                algos = {cb::Algo::static_tree, cb::Algo::online_sgd, cb::Algo::bandit_array};
            } else {
                algos = {cb::Algo::static_tree, cb::Algo::static_ols, cb::Algo::bandit_array};
            }

            cb::ContextSchema schema = cb::datagen::schema();
            std::vector<cb::InteractionRecord> records;
            if (synth) {
                records = cb::datagen::read_csv(cmp_data);
            } else {
                MlData data = load_movielens(cmp_paths, parse_context_fields(cmp_fields), "");
                schema = std::move(data.schema);
                records = std::move(data.records);
            }
            if (cmp_limit > 0)
                records.resize(std::min(records.size(), cmp_flags.train + cmp_limit));

            const cb::ProtocolParams params = to_params(cmp_flags, cmp_flags.train);
            const cb::Comparison result =
                cb::compare_protocol(schema, records, task, algos, params);
            std::error_code ec;
            fs::create_directories(cmp_flags.out, ec);
            if (ec)
                throw cb::io_error("cannot create directory '" + cmp_flags.out +
                                   "': " + ec.message());
            cb::write_comparison_csv(result, fs::path(cmp_flags.out) / "comparison.csv");
            print_comparison(result);
        }
        return 0;
    } catch (const cb::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cb::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
