#include "torch_doctest.hpp"

#include <fstream>

#include "n2d/core/error.hpp"
#include "n2d/nn/checkpoint.hpp"
#include "n2d/nn/training.hpp"
#include "test_util.hpp"

using namespace n2d;
using namespace n2d::nn;

namespace {

GeneratorConfig cfg32(std::uint64_t seed) {
  GeneratorConfig g;
  g.height = 32;
  g.width = 32;
  g.seed = seed;
  g.channel_divisor = 8;
  return g;
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  test::TempDir dir;
  auto gen = build_generator(cfg32(1));
  auto critics = build_critics(2, 32, 5);
  save_checkpoint(dir.path() / "a.ck", gen, critics, Pathway::LocalOnly);
  CHECK(read_checkpoint_config(dir.path() / "a.ck") == gen->config());

  auto ck = load_checkpoint(dir.path() / "a.ck");
  CHECK(ck.pathway == Pathway::LocalOnly);
  CHECK(parameter_digest(*ck.generator, true) == parameter_digest(*gen, true));
  CHECK(parameter_digest(*ck.critics, true) == parameter_digest(*critics, true));

  auto other = build_generator(cfg32(1));
  auto other_critics = build_critics(2, 32, 99);
  load_checkpoint_into(dir.path() / "a.ck", other, other_critics);
  CHECK(parameter_digest(*other_critics) == parameter_digest(*critics));

  // Saving twice gives the same bytes.
  save_checkpoint(dir.path() / "b.ck", gen, critics, Pathway::LocalOnly);
  CHECK(test::read_file(dir.path() / "a.ck") == test::read_file(dir.path() / "b.ck"));
}

TEST_CASE("checkpoint rejects mismatched architecture and corrupt files") {
  test::TempDir dir;
  auto gen = build_generator(cfg32(1));
  auto critics = build_critics(2, 32, 5);
  save_checkpoint(dir.path() / "a.ck", gen, critics);

  GeneratorConfig wide = cfg32(1);
  wide.channel_divisor = 4;
  auto g2 = build_generator(wide);
  CHECK_THROWS_AS(load_checkpoint_into(dir.path() / "a.ck", g2, critics), ShapeError);
  GeneratorConfig reseeded = cfg32(2);
  auto g3 = build_generator(reseeded);
  CHECK_THROWS_AS(load_checkpoint_into(dir.path() / "a.ck", g3, critics), ShapeError);

  const std::string bytes = test::read_file(dir.path() / "a.ck");
  {
    std::ofstream out(dir.path() / "trunc.ck", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "trunc.ck"), DataError);
  {
    std::ofstream out(dir.path() / "magic.ck", std::ios::binary);
    out << "XXXXXXXX" << bytes.substr(8);
  }
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "magic.ck"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "absent.ck"), DataError);
}
