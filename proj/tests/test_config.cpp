#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "catch2/catch_amalgamated.hpp"
#include "reach/config.hpp"

using namespace reach;

namespace {
std::string cfg_path(const char* name) { return std::string(REACH_CONFIG_DIR "/") + name; }

/* write a throwaway config and hand back its path */
class TempFile {
 public:
  explicit TempFile(const std::string& text) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("reach-cfg-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".toml");
    std::ofstream f(path_, std::ios::binary);
    f << text;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

constexpr const char* kMinimalFinite = R"(
[system]
type = "finite"
states = ["s", "t"]
inputs = ["u"]
transitions = ["s u t"]

[spec]
q = ["s", "t"]
t = ["t"]
)";
}  // namespace

TEST_CASE("defaults fill unspecified settings") {
  TempFile f(kMinimalFinite);
  ProblemConfig cfg = load_problem(f.path());
  REQUIRE(cfg.finite);
  REQUIRE(cfg.weight_mode == WeightMode::kIncludeTarget);
  REQUIRE(cfg.coarsen_mode == CoarsenMode::kInput);
  REQUIRE(cfg.max_sequences == 4096);
  REQUIRE_FALSE(cfg.has_simulate);
  REQUIRE(cfg.oracle.state_cap == 8);
  REQUIRE(cfg.oracle.enable_seeds);
  REQUIRE(cfg.references.empty());
  REQUIRE(cfg.finite_system.num_states() == 2);
  REQUIRE(cfg.finite_spec.t_states == StateSet({1}));
}

TEST_CASE("example configs load with their declared shapes") {
  SECTION("four-state") {
    ProblemConfig cfg = load_problem(cfg_path("example1.toml"));
    REQUIRE(cfg.finite);
    REQUIRE(cfg.finite_system.num_states() == 4);
    REQUIRE(cfg.finite_system.num_inputs() == 2);
    REQUIRE(cfg.finite_spec.q_states == StateSet({0, 1, 2}));
    REQUIRE(cfg.finite_spec.t_states == StateSet({1}));
    REQUIRE(cfg.references.at("entropy") == 1.0);
    REQUIRE(cfg.references.at("groups") == 2.0);
  }
  SECTION("two-region scalar") {
    ProblemConfig cfg = load_problem(cfg_path("example2.toml"));
    REQUIRE_FALSE(cfg.finite);
    REQUIRE(cfg.region_mode);
    REQUIRE(cfg.regions.size() == 2);
    REQUIRE(cfg.continuous.inputs == std::vector<Vec>({{-0.5}, {0.75}}));
    REQUIRE(cfg.continuous.input_labels == std::vector<std::string>({"low", "high"}));
    REQUIRE(cfg.has_simulate);
    REQUIRE(cfg.x0 == Vec({5.5}));
    REQUIRE(cfg.sim_steps == 16);
  }
  SECTION("three-room building") {
    ProblemConfig cfg = load_problem(cfg_path("example3.toml"));
    REQUIRE_FALSE(cfg.finite);
    REQUIRE_FALSE(cfg.region_mode);
    REQUIRE(cfg.state_eta == Vec({1.2, 1.2, 1.2}));
    REQUIRE(cfg.continuous.model->state_dim() == 3);
    REQUIRE(cfg.continuous.inputs.size() == 216000);  // 60 duty values per axis
    REQUIRE(cfg.continuous.inputs.front() == Vec({0.005, 0.005, 0.005}));
    REQUIRE(cfg.references.at("cells") == 215.0);
    REQUIRE(cfg.references.at("entropy") == 6.1699);
  }
}

TEST_CASE("grid domain defaults to the hull of Q") {
  TempFile f(R"(
[system]
type = "scalar_linear"
[spec]
q = [[[0.0, 1.0]], [[3.0, 4.0]]]
t = [[0.0, 1.0]]
[grid]
eta = [0.5]
[inputs]
values = [0.25]
)");
  ProblemConfig cfg = load_problem(f.path());
  REQUIRE(cfg.domain.axes.size() == 1);
  REQUIRE(cfg.domain.axes[0].lo == 0.0);
  REQUIRE(cfg.domain.axes[0].hi == 4.0);
}

TEST_CASE("parser accepts comments, escapes and nested arrays") {
  TempFile f(R"(
# leading comment
[system]
type = "finite"  # trailing comment
states = ["a\"b", "t"]
inputs = ["u"]
transitions = [
  # comment inside an array
  "a\"b u t",
]
[spec]
q = ["a\"b", "t"]
t = ["t"]
)");
  ProblemConfig cfg = load_problem(f.path());
  REQUIRE(cfg.finite_system.state_name(0) == "a\"b");
}

TEST_CASE("malformed configs fail with located errors") {
  auto load = [](const std::string& text) {
    TempFile f(text);
    return load_problem(f.path());
  };
  SECTION("missing spec") {
    REQUIRE_THROWS_AS(load("[system]\ntype = \"finite\"\nstates = [\"s\"]\ninputs = [\"u\"]\n"
                           "transitions = []\n"),
                      ConfigError);
  }
  SECTION("unknown system type") {
    REQUIRE_THROWS_WITH(load("[system]\ntype = \"hovercraft\"\n"),
                        Catch::Matchers::ContainsSubstring("unknown system.type"));
  }
  SECTION("transition token count") {
    REQUIRE_THROWS_WITH(
        load("[system]\ntype = \"finite\"\nstates = [\"s\",\"t\"]\ninputs = [\"u\"]\n"
             "transitions = [\"s u\"]\n[spec]\nq = [\"s\",\"t\"]\nt = [\"t\"]\n"),
        Catch::Matchers::ContainsSubstring("three tokens"));
  }
  SECTION("rect with lo above hi") {
    REQUIRE_THROWS_WITH(load("[system]\ntype = \"scalar_linear\"\n[spec]\nq = [[2.0, 1.0]]\n"
                             "t = [[0.0, 1.0]]\n[grid]\neta = [0.5]\n[inputs]\nvalues = [0.1]\n"),
                        Catch::Matchers::ContainsSubstring("lo > hi"));
  }
  SECTION("eta dimension mismatch") {
    REQUIRE_THROWS_WITH(load("[system]\ntype = \"scalar_linear\"\n[spec]\nq = [[0.0, 1.0]]\n"
                             "t = [[0.0, 0.5]]\n[grid]\neta = [0.5, 0.5]\n[inputs]\nvalues = [0.1]\n"),
                        Catch::Matchers::ContainsSubstring("dimension mismatch"));
  }
  SECTION("label count mismatch") {
    REQUIRE_THROWS_WITH(
        load("[system]\ntype = \"scalar_linear\"\n[spec]\nq = [[0.0, 1.0]]\nt = [[0.0, 0.5]]\n"
             "[grid]\neta = [0.5]\n[inputs]\nvalues = [0.1, 0.2]\nlabels = [\"one\"]\n"),
        Catch::Matchers::ContainsSubstring("labels size mismatch"));
  }
  SECTION("non-numeric reference") {
    REQUIRE_THROWS_WITH(load(std::string(kMinimalFinite) + "[references]\nentropy = \"high\"\n"),
                        Catch::Matchers::ContainsSubstring("must be a number"));
  }
  SECTION("bad weight mode") {
    REQUIRE_THROWS_WITH(load(std::string(kMinimalFinite) + "[entropy]\nweight_mode = \"maybe\"\n"),
                        Catch::Matchers::ContainsSubstring("weight_mode"));
  }
  SECTION("bad coarsen mode") {
    REQUIRE_THROWS_WITH(load(std::string(kMinimalFinite) + "[entropy]\ncoarsen = \"fancy\"\n"),
                        Catch::Matchers::ContainsSubstring("unknown coarsening mode"));
  }
  SECTION("unterminated string") {
    REQUIRE_THROWS_AS(load("[system]\ntype = \"finite\n"), ConfigError);
  }
}

TEST_CASE("entropy and oracle settings override the defaults") {
  TempFile f(std::string(kMinimalFinite) + R"(
[entropy]
weight_mode = "exclude-target"
coarsen = "cover"
max_sequences = 64

[oracle]
state_cap = 5
max_cover_size = 3
enable_seeds = false

[simulate]
steps = 7
seed = 99
)");
  ProblemConfig cfg = load_problem(f.path());
  REQUIRE(cfg.weight_mode == WeightMode::kExcludeTarget);
  REQUIRE(cfg.coarsen_mode == CoarsenMode::kCover);
  REQUIRE(cfg.max_sequences == 64);
  REQUIRE(cfg.oracle.state_cap == 5);
  REQUIRE(cfg.oracle.max_cover_size == 3);
  REQUIRE_FALSE(cfg.oracle.enable_seeds);
  REQUIRE(cfg.has_simulate);
  REQUIRE(cfg.x0.empty());
  REQUIRE(cfg.sim_steps == 7);
  REQUIRE(cfg.sim_seed == 99);
}

TEST_CASE("relation files resolve names against both systems") {
  ProblemConfig c1 = load_problem(cfg_path("frr_fine.toml"));
  ProblemConfig c2 = load_problem(cfg_path("example1.toml"));
  RefinementWitness w = load_relation(cfg_path("frr_relation.toml"), c1.finite_system,
                                      c2.finite_system);
  REQUIRE(w.pairs.size() == 5);
  REQUIRE(w.input_map == std::vector<InputId>({0, 1}));

  SECTION("pair needs two tokens") {
    TempFile f("[relation]\npairs = [\"x0a\"]\ninputs = [\"a a\", \"b b\"]\n");
    REQUIRE_THROWS_WITH(load_relation(f.path(), c1.finite_system, c2.finite_system),
                        Catch::Matchers::ContainsSubstring("two state names"));
  }
  SECTION("every abstract input needs an image") {
    TempFile f("[relation]\npairs = [\"x0a q0\"]\ninputs = [\"a a\"]\n");
    REQUIRE_THROWS_WITH(load_relation(f.path(), c1.finite_system, c2.finite_system),
                        Catch::Matchers::ContainsSubstring("no mapped image"));
  }
}

TEST_CASE("finite problems have no abstraction to build") {
  ProblemConfig cfg = load_problem(cfg_path("example1.toml"));
  REQUIRE_THROWS_AS(build_abstraction(cfg), ConfigError);
}
