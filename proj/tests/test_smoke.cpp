#include "catch2/catch_amalgamated.hpp"
#include "reach/cache.hpp"
#include "reach/coder.hpp"
#include "reach/frr.hpp"
#include "reach/oracle.hpp"
#include "reach/pipeline.hpp"

TEST_CASE("headers compile and the target marker is stable") {
  REQUIRE(reach::kTargetNode == -1);
}
