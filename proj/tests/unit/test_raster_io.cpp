#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "rsv/error.hpp"
#include "rsv/io.hpp"
#include "rsv/raster.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace rsv;
using rsv::testing::TempDir;

namespace {
std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }
}  // namespace

TEST_CASE("decode P5 from the format definition") {
  auto bytes = bytes_of("P5 2 2 255\n");
  bytes.insert(bytes.end(), {0, 10, 200, 255});
  const Raster r = decode_pnm(bytes);
  CHECK(r.height() == 2);
  CHECK(r.width() == 2);
  CHECK(r.channels() == 1);
  CHECK(r.data() == std::vector<std::uint8_t>{0, 10, 200, 255});
}

TEST_CASE("PNM header comments are skipped") {
  auto bytes = bytes_of("P5\n# a comment\n1 1\n255\n");
  bytes.push_back(7);
  CHECK(decode_pnm(bytes).at(0, 0) == 7);
}

TEST_CASE("PNM parse errors name the byte offset") {
  SUBCASE("P4 magic") {
    auto bytes = bytes_of("P4 1 1 255\n\x01");
    try {
      decode_pnm(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SUBCASE("maxval other than 255") {
    auto bytes = bytes_of("P5 1 1 65535\n\x01\x02");
    CHECK_THROWS_AS(decode_pnm(bytes), ParseError);
  }
  SUBCASE("truncated payload") {
    auto bytes = bytes_of("P6 2 2 255\n");
    bytes.resize(bytes.size() + 11);
    try {
      decode_pnm(bytes);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == bytes.size());
      CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }
}

TEST_CASE("write_raster / read_raster") {
  TempDir dir;
  SUBCASE("1x1 black pixel") {
    Raster r(1, 1, 1);
    write_raster(r, dir / "black.pgm");
    CHECK(read_raster(dir / "black.pgm") == r);
  }
  SUBCASE("three channels produce P6") {
    Raster r(2, 3, 3);
    write_raster(r, dir / "rgb.ppm");
    const auto bytes = read_file_bytes(dir / "rgb.ppm");
    CHECK(bytes[0] == 'P');
    CHECK(bytes[1] == '6');
  }
  SUBCASE("missing sidecar gives unit resolution") {
    auto bytes = bytes_of("P5 1 1 255\n");
    bytes.push_back(3);
    write_file_atomic(dir / "bare.pgm", bytes);
    const Raster r = read_raster(dir / "bare.pgm");
    CHECK(r.meta() == GeoMeta{});
  }
  SUBCASE("no .partial file survives a successful write") {
    write_raster(Raster(2, 2, 1), dir / "x.pgm");
    CHECK_FALSE(std::filesystem::exists(dir / "x.pgm.partial"));
  }
}

TEST_CASE("random rasters round-trip bit-exactly with their metadata") {
  TempDir dir;
  std::mt19937_64 g(11);
  for (int k = 0; k < 100; ++k) {
    const GeoMeta meta{0.25 + synth::unit(g) * 4.0, synth::below(g, 1000), synth::below(g, 1000)};
    const Raster r = synth::random_raster(g, 1 + synth::below(g, 40), 1 + synth::below(g, 40), synth::unit(g) < 0.5 ? 1 : 3, meta);
    const auto path = dir / (r.channels() == 3 ? "r.ppm" : "r.pgm");
    write_raster(r, path);
    REQUIRE(read_raster(path) == r);
  }
}

TEST_CASE("sidecar validation") {
  CHECK_THROWS_AS(sidecar_from_json(R"({"width":2})"), ValidationError);
  CHECK_THROWS_AS(sidecar_from_json(R"({"height":2,"width":2,"resolution_row_m_per_px":1,"resolution_col_m_per_px":2})"),
                  ValidationError);
  CHECK_THROWS_AS(sidecar_from_json(R"({"height":2,"width":2,"resolution_m_per_px":0})"), ValidationError);
  CHECK_THROWS_AS(sidecar_from_json("{not json"), ParseError);
  const Sidecar s = sidecar_from_json(R"({"height":3,"width":4,"resolution_m_per_px":1.5,"origin_row":7,"origin_col":9})");
  CHECK(s.meta == GeoMeta{1.5, 7, 9});
  CHECK(sidecar_from_json(sidecar_to_json(s)).meta == s.meta);
}

TEST_CASE("masks serialize as P5 with 0/255") {
  TempDir dir;
  BinaryMask m(2, 2);
  m.set(0, 1);
  write_mask(m, dir / "m.pgm");
  const Raster r = read_raster(dir / "m.pgm");
  CHECK(r.data() == std::vector<std::uint8_t>{0, 255, 0, 0});
  CHECK(read_mask(dir / "m.pgm") == m);
}

TEST_CASE("probability maps") {
  TempDir dir;
  SUBCASE("2x2 of 0.5 is a 16-byte payload and round-trips") {
    const ProbMap p(2, 2, 0.5f, GeoMeta{2.0, 4, 8});
    write_prob_map(p, dir / "p.f32");
    CHECK(std::filesystem::file_size(dir / "p.f32") == 16);
    CHECK(read_prob_map(dir / "p.f32") == p);
  }
  SUBCASE("15-byte payload for 2x2 is a length error") {
    std::vector<std::uint8_t> bytes(15);
    CHECK_THROWS_AS(decode_f32(bytes, Sidecar{2, 2, {}}), ValidationError);
  }
  SUBCASE("value 1.25 is rejected") {
    std::vector<std::uint8_t> bytes(16, 0);
    const float bad = 1.25f;
    std::memcpy(bytes.data() + 4, &bad, 4);
    CHECK_THROWS_AS(decode_f32(bytes, Sidecar{2, 2, {}}), ValidationError);
  }
  SUBCASE("missing sidecar") {
    write_file_atomic(dir / "q.f32", std::vector<std::uint8_t>(4));
    CHECK_THROWS_AS(read_prob_map(dir / "q.f32"), IoError);
  }
  SUBCASE("random maps round-trip exactly") {
    std::mt19937_64 g(5);
    for (int k = 0; k < 50; ++k) {
      ProbMap p(1 + synth::below(g, 30), 1 + synth::below(g, 30));
      for (auto& v : p.probs()) v = static_cast<float>(synth::unit(g));
      write_prob_map(p, dir / "r.f32");
      REQUIRE(read_prob_map(dir / "r.f32") == p);
    }
  }
}

TEST_CASE("threshold") {
  const GeoMeta meta{3.0, 1, 2};
  const ProbMap p(3, 3, 0.7f, meta);
  CHECK(threshold(p, 0.5).count() == 9);
  CHECK(threshold(p, 0.7f).count() == 9);  // ties are positive
  CHECK(threshold(p, 0.5).meta() == meta);
  CHECK_THROWS_AS(threshold(p, 1.5), ValidationError);
  CHECK_THROWS_AS(threshold(p, -0.1), ValidationError);

  std::mt19937_64 g(3);
  ProbMap q(20, 30);
  for (auto& v : q.probs()) v = static_cast<float>(synth::unit(g));
  const BinaryMask m = threshold(q, 0.5);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 30; ++c) REQUIRE(m.at(r, c) == (q.at(r, c) >= 0.5f));
  // Monotone in t.
  for (double t1 = 0.0; t1 <= 0.9; t1 += 0.1) CHECK(is_subset(threshold(q, t1 + 0.05), threshold(q, t1)));
}
