#include "glaeser/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace glaeser {

using nlohmann::json;

namespace {

json vec_json(const Vec& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

Vec json_vec(const json& a, const char* what)
{
    if (!a.is_array())
        throw std::invalid_argument(std::string(what) + " must be an array of numbers");
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number())
            throw std::invalid_argument(std::string(what) + " must be an array of numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key))
        return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("field '") + key + "' has the wrong type");
    }
}

json fiber_json(const AffineFiber& f)
{
    json j;
    j["empty"] = f.is_empty();
    if (!f.is_empty()) {
        j["dim"] = f.dim();
        j["v"] = vec_json(f.v());
    }
    return j;
}

} // namespace

Problem parse_problem(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("problem file must be a JSON object");
    for (const char* key : {"vars", "f", "phi", "box"})
        if (!doc.contains(key))
            throw std::invalid_argument(std::string("missing field '") + key + "'");

    Problem p;
    p.vars = get_or<std::vector<std::string>>(doc, "vars", {});
    const auto fs = get_or<std::vector<std::string>>(doc, "f", {});
    for (const auto& s : fs)
        p.f.push_back(parse_poly(s, p.vars));
    p.phi = parse_expr(get_or<std::string>(doc, "phi", ""), p.vars);
    const json& box = doc.at("box");
    if (!box.is_object() || !box.contains("lo") || !box.contains("hi"))
        throw std::invalid_argument("box needs 'lo' and 'hi'");
    p.box = Box{json_vec(box.at("lo"), "box.lo"), json_vec(box.at("hi"), "box.hi")};
    if (p.box.n() != p.vars.size() || p.box.hi.size() != p.box.lo.size())
        throw std::invalid_argument("box dimension differs from the variable count");
    p.box.validate();
    p.grid_depth = get_or<int>(doc, "grid_depth", p.grid_depth);
    p.threads = get_or<int>(doc, "threads", -1);

    p.probe = default_probe(p.box);
    if (doc.contains("probe")) {
        const json& pr = doc.at("probe");
        if (!pr.is_object())
            throw std::invalid_argument("probe must be an object");
        LimitConfig& lc = p.probe.limit;
        lc.depth = get_or<int>(pr, "depth", lc.depth);
        lc.beta = get_or<double>(pr, "beta", lc.beta);
        lc.t0 = get_or<double>(pr, "t0", lc.t0);
        lc.limit_tol = get_or<double>(pr, "limit_tol", lc.limit_tol);
        lc.window = get_or<int>(pr, "window", lc.window);
        if (pr.contains("directions")) {
            p.probe.directions.clear();
            for (const auto& d : pr.at("directions")) {
                Vec v = json_vec(d, "probe.directions[]");
                if (v.size() != static_cast<Eigen::Index>(p.vars.size()) || v.norm() == 0.0)
                    throw std::invalid_argument("probe direction has the wrong length or is zero");
                p.probe.directions.push_back(v.normalized());
            }
        }
    }
    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        if (!t.is_object())
            throw std::invalid_argument("tolerances must be an object");
        p.tol.rank_tol = get_or<double>(t, "rank_tol", p.tol.rank_tol);
        p.tol.residual_tol = get_or<double>(t, "residual_tol", p.tol.residual_tol);
        p.tol.zero_tol = get_or<double>(t, "zero_tol", p.tol.zero_tol);
    }
    p.probe.rank_tol = p.tol.rank_tol;
    p.validate();
    return p;
}

Problem load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

namespace {

json problem_json(const Problem& p)
{
    json j;
    j["vars"] = p.vars;
    json fs = json::array();
    for (const auto& f : p.f)
        fs.push_back(f.to_string(p.vars));
    j["f"] = fs;
    j["phi"] = p.phi.to_string(p.vars);
    j["box"] = {{"lo", vec_json(p.box.lo)}, {"hi", vec_json(p.box.hi)}};
    j["grid_depth"] = p.grid_depth;
    json dirs = json::array();
    for (const auto& d : p.probe.directions)
        dirs.push_back(vec_json(d));
    const LimitConfig& lc = p.probe.limit;
    j["probe"] = {{"depth", lc.depth},         {"beta", lc.beta},     {"t0", lc.t0},
                  {"limit_tol", lc.limit_tol}, {"window", lc.window}, {"directions", dirs}};
    j["tolerances"] = {
        {"rank_tol", p.tol.rank_tol}, {"residual_tol", p.tol.residual_tol}, {"zero_tol", p.tol.zero_tol}};
    return j;
}

int exit_code(Verdict::Kind k)
{
    switch (k) {
    case Verdict::Kind::Solvable:
        return 0;
    case Verdict::Kind::Unsolvable:
        return 1;
    case Verdict::Kind::Indeterminate:
        return 2;
    }
    return 3;
}

} // namespace

std::string report_json(const Problem& p, const Verdict& v)
{
    json j;
    j["verdict"] = to_string(v.kind);
    j["exit_code"] = exit_code(v.kind);
    j["message"] = v.message;
    j["problem"] = problem_json(p);
    if (v.certificate) {
        const Certificate& c = *v.certificate;
        j["certificate"] = {{"point", vec_json(c.point)},
                            {"grid_index", c.grid_index},
                            {"level", c.level},
                            {"reason", c.reason},
                            {"cause", c.cause}};
    }
    if (v.section) {
        const SampledSection& s = *v.section;
        j["section"] = {{"sup_phi_coefficients", s.sup_F},
                        {"sup_least_norm", s.sup_v},
                        {"section_constant", s.norm_constant},
                        {"norm_bound", v.norm_bound},
                        {"whitney_cubes", s.whitney_cubes},
                        {"whitney_constant", s.whitney_constant},
                        {"recursion_depth", s.recursion_depth},
                        {"lowest_stratum_points", s.e1.size()},
                        {"fiber_residual", v.residual.fiber},
                        {"equation_residual", v.residual.equation}};
    }
    json pw = json::array();
    const Grid grid(p.box, p.grid_depth);
    for (const auto& rec : v.pointwise)
        pw.push_back({{"point", vec_json(grid.point(rec.grid_index))},
                      {"pass", rec.result.pass},
                      {"witness", vec_json(rec.result.witness)},
                      {"limit", to_string(rec.result.limit.kind)}});
    j["diagnostics"] = {{"tainted_points", v.tainted_points},
                        {"undetermined_limits", v.undetermined_limits},
                        {"stabilization_index",
                         v.stabilization_index ? json(*v.stabilization_index) : json(nullptr)},
                        {"levels_computed", v.levels_computed},
                        {"zero_set_points", v.zero_set.size()},
                        {"pointwise", pw}};
    j["timings"] = v.timings;
    return j.dump(2);
}

namespace {

struct Overrides {
    int grid_depth = -1;
    int probe_depth = -1;
    double limit_tol = -1;
    double residual_tol = -1;
    int threads = -1;
    bool threads_set = false;
};

void apply(Problem& p, const Overrides& o)
{
    if (o.grid_depth >= 0)
        p.grid_depth = o.grid_depth;
    if (o.probe_depth >= 0)
        p.probe.limit.depth = o.probe_depth;
    if (o.limit_tol > 0)
        p.probe.limit.limit_tol = o.limit_tol;
    if (o.residual_tol > 0)
        p.tol.residual_tol = o.residual_tol;
    if (o.threads_set)
        p.threads = o.threads;
    p.validate();
}

int cmd_refine(const Problem& p, int level, std::ostream& out)
{
    const int max_level = 2 * static_cast<int>(p.r()) + 1;
    if (level < 0 || level > max_level)
        throw std::invalid_argument("level must lie in [0, " + std::to_string(max_level) + "]");
    const EquationBundle B = p.bundle();
    const Grid grid(p.box, p.grid_depth);
    SampledBundle S = sample_bundle(B, grid);
    for (int l = 0; l < level; ++l)
        S = refine(B, S, p.probe, p.threads);
    json pts = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        json e = fiber_json(S.fibers[i]);
        e["index"] = i;
        e["x"] = vec_json(grid.point(i));
        const FiberDiag& d = S.diag[i];
        e["tainted"] = d.tainted();
        e["regular"] = d.regular;
        if (!d.regular && level > 0)
            e["probe"] = {{"rays", d.rays},
                          {"normals", d.normals},
                          {"dropped", d.dropped},
                          {"undetermined", d.undetermined},
                          {"late", d.late},
                          {"achieved_tol", d.achieved_tol},
                          {"finest_scale", d.finest_scale}};
        if (!d.cause.empty())
            e["cause"] = d.cause;
        pts.push_back(std::move(e));
    }
    json j;
    j["level"] = level;
    j["grid_depth"] = p.grid_depth;
    j["tainted_points"] = S.tainted_count();
    j["points"] = std::move(pts);
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_whitney(const Problem& p, std::ostream& out)
{
    const EquationBundle B = p.bundle();
    const Grid grid(p.box, p.grid_depth);
    IterateOptions opts;
    opts.threads = p.threads;
    opts.agree_tol = p.tol.rank_tol;
    const IterateResult it = iterate_refine(B, grid, p.probe, 2 * static_cast<int>(p.r()) + 1, opts);
    if (it.empty_level)
        throw std::runtime_error("bundle has an Empty fiber at level " + std::to_string(*it.empty_level) +
                                 "; no strata to decompose");
    const SampledBundle& S = it.result();
    const Strata st = stratify(S);
    std::vector<Vec> e1;
    for (std::size_t i : st.e1())
        e1.push_back(grid.point(i));
    const WhitneyCover cover =
        whitney_decompose(p.box, std::make_shared<PointSetE1>(e1), grid.step().minCoeff());
    const WhitneyStats ws = whitney_stats(cover);
    json cubes = json::array();
    for (const auto& q : cover.cubes())
        cubes.push_back({{"level", q.level},
                         {"index", q.index},
                         {"center", vec_json(q.center())},
                         {"side", q.side},
                         {"truncated", q.truncated}});
    json pts = json::array();
    for (const auto& x : e1)
        pts.push_back(vec_json(x));
    json j;
    j["e1"] = pts;
    j["e1_dim"] = st.k_min;
    j["stabilization_index"] = it.stabilization_index ? json(*it.stabilization_index) : json(nullptr);
    j["min_side"] = cover.min_side();
    j["stats"] = {{"cubes", ws.cubes},
                  {"truncated", ws.truncated},
                  {"min_ratio", ws.cubes > ws.truncated ? json(ws.min_ratio) : json(nullptr)},
                  {"max_ratio", ws.max_ratio},
                  {"max_level", ws.max_level}};
    j["cubes"] = std::move(cubes);
    out << j.dump(2) << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Decide whether phi lies in the continuous ideal generated by polynomials f_i", "glaeser"};
    app.require_subcommand(1);
    Overrides o;
    std::string file, out_csv;
    int level = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("file", file, "problem file (JSON)")->required();
        sub->add_option("--grid-depth", o.grid_depth, "grid subdivision depth");
        sub->add_option("--probe-depth", o.probe_depth, "number of probe scales");
        sub->add_option("--limit-tol", o.limit_tol, "limit detection tolerance");
        sub->add_option("--residual-tol", o.residual_tol, "section residual tolerance");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")
            ->each([&](const std::string&) { o.threads_set = true; });
    };
    auto* check = app.add_subcommand("check", "solve and print the report");
    add_common(check);
    auto* solve_cmd = app.add_subcommand("solve", "solve, print the report and write the section as CSV");
    add_common(solve_cmd);
    solve_cmd->add_option("--out", out_csv, "section CSV path")->required();
    auto* refine_cmd = app.add_subcommand("refine", "dump fibers of a refinement level");
    add_common(refine_cmd);
    refine_cmd->add_option("--level", level, "refinement level");
    auto* whitney_cmd = app.add_subcommand("whitney", "dump Whitney cubes of the lowest stratum");
    add_common(whitney_cmd);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }

    try {
        Problem p = load_problem(file);
        apply(p, o);
        if (refine_cmd->parsed())
            return cmd_refine(p, level, out);
        if (whitney_cmd->parsed())
            return cmd_whitney(p, out);
        const Verdict v = solve(p);
        if (solve_cmd->parsed() && v.kind == Verdict::Kind::Solvable) {
            std::ofstream csv(out_csv, std::ios::binary);
            if (!csv)
                throw std::runtime_error("cannot write " + out_csv);
            write_section_csv(csv, *v.section, p.bundle(), p.vars);
        }
        out << report_json(p, v) << '\n';
        return exit_code(v.kind);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return 3;
}

} // namespace glaeser
