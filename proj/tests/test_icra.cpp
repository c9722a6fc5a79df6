#include <gtest/gtest.h>

#include <filesystem>

#include "fuzz.hpp"
#include "icr/icr.hpp"
#include "support.hpp"

using namespace icr;

namespace {

ErrorCode read_error(const std::vector<std::uint8_t>& b) {
    try {
        read_dump(b);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "parsed";
    return ErrorCode::FormatError;
}

std::vector<std::uint8_t> small_dump() {
    auto s = AttentionSlice::zeros(1, 1, 4, {3});
    for (int j = 0; j < 4; ++j) s.row(0, 0, 0)[j] = 0.25f;
    return write_dump(s, {"tiny"});
}

}  // namespace

TEST(Icra, RoundTrip) {
    SplitMix64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto T = static_cast<std::uint32_t>(1 + rng.below(20));
        std::vector<std::uint32_t> rows;
        for (std::uint32_t k = 0; k < T; ++k)
            if (rng.below(2)) rows.push_back(k);
        const auto s = fixture::random_slice(rng, 1 + rng.below(3), 1 + rng.below(3), T, rows);
        const auto back = read_dump(write_dump(s, {"m" + std::to_string(t)}));
        EXPECT_TRUE(bitwise_equal(s, back.slice));
        EXPECT_EQ(back.meta.model_name, "m" + std::to_string(t));
    }
}

TEST(Icra, BodyLengthArithmetic) {
    const auto b = small_dump();
    const std::size_t header = 4 + 4 + 4 + 4 + 5 * 4 + 4;  // magic, version, name len, "tiny", shape, one row
    EXPECT_EQ(b.size() - header, 16u);
}

TEST(Icra, EmptyRowSet) {
    const auto s = AttentionSlice::zeros(2, 3, 5, {});
    const auto b = write_dump(s);
    const auto back = read_dump(b);
    EXPECT_EQ(back.slice.num_rows(), 0u);
    EXPECT_EQ(back.slice.values().size(), 0u);
    EXPECT_EQ(b.size(), 4u + 4 + 4 + 20);
}

TEST(Icra, TypedErrors) {
    auto b = small_dump();
    auto bad = b;
    std::memcpy(bad.data(), "XXXX", 4);
    EXPECT_EQ(read_error(bad), ErrorCode::BadMagic);

    bad = b;
    bad.pop_back();
    EXPECT_EQ(read_error(bad), ErrorCode::TruncatedBody);

    bad = b;
    bad.push_back(0);
    EXPECT_EQ(read_error(bad), ErrorCode::TrailingBytes);

    bad = b;
    fuzz::poke_u32(bad, 4, 2);
    EXPECT_EQ(read_error(bad), ErrorCode::UnsupportedVersion);

    bad = b;
    fuzz::poke_u32(bad, 16 + 16, 1);  // dtype
    EXPECT_EQ(read_error(bad), ErrorCode::UnsupportedDtype);

    bad = b;
    fuzz::poke_u32(bad, 16 + 20, 4);  // row index == T
    EXPECT_EQ(read_error(bad), ErrorCode::RowOutOfRange);

    bad = b;
    fuzz::poke_u32(bad, 16, 0);  // L
    EXPECT_EQ(read_error(bad), ErrorCode::ShapeMismatch);

    EXPECT_EQ(read_error({'I', 'C'}), ErrorCode::TruncatedHeader);
    EXPECT_EQ(read_error({'I', 'C', 'R', 'A', 1, 0}), ErrorCode::TruncatedHeader);

    auto two = write_dump(AttentionSlice::zeros(1, 1, 4, {1, 2}));
    fuzz::poke_u32(two, 12 + 20 + 4, 1);  // second row index equals the first
    EXPECT_EQ(read_error(two), ErrorCode::NonAscendingRows);
}

TEST(Icra, HugeDeclaredShapeDoesNotAllocate) {
    auto b = small_dump();
    fuzz::poke_u32(b, 16, 0xffffffffu);
    fuzz::poke_u32(b, 20, 0xffffffffu);
    fuzz::poke_u32(b, 24, 0xffffffffu);
    EXPECT_EQ(read_error(b), ErrorCode::TruncatedBody);
}

TEST(Icra, FuzzYieldsOnlyTypedErrors) {
    SplitMix64 rng(404);
    for (int t = 0; t < 2000; ++t) {
        const auto b = fuzz::mutate(rng, fuzz::valid_dump(rng));
        try {
            read_dump(b);
        } catch (const Error&) {
        } catch (...) {
            FAIL() << "untyped exception on case " << t;
        }
    }
}

TEST(Icra, ToyDumpValidates) {
    ToyBackend backend(ToyConfig{});
    SplitMix64 rng(3);
    const QueryInput in{"q", {"what now", QueryStyle::IE}, fixture::random_docs(rng, 4)};
    const auto r = rerank_query(backend, in, {});
    const auto back = read_dump(write_dump(r.attention_query, {"toy"}));
    EXPECT_TRUE(validate_dump(back.slice).ok());
    EXPECT_TRUE(validate_dump(r.attention_cal).ok());
}

TEST(Icra, ValidatorFlagsScaledRowAndCausality) {
    auto s = AttentionSlice::zeros(1, 1, 4, {1, 3});
    s.row(0, 0, 0)[0] = 0.5f;
    s.row(0, 0, 0)[1] = 0.5f;
    for (int j = 0; j < 4; ++j) s.row(0, 0, 1)[j] = 0.25f;
    EXPECT_TRUE(validate_dump(s).ok());

    auto scaled = s;
    for (auto& v : scaled.row(0, 0, 1)) v *= 2.0f;
    const auto r1 = validate_dump(scaled);
    ASSERT_FALSE(r1.ok());
    EXPECT_EQ(r1.violations[0].kind, ViolationKind::RowSum);

    auto leak = s;
    leak.row(0, 0, 0)[1] = 0.4f;
    leak.row(0, 0, 0)[2] = 0.1f;
    const auto r2 = validate_dump(leak);
    ASSERT_FALSE(r2.ok());
    EXPECT_EQ(r2.violations[0].kind, ViolationKind::Causality);
    EXPECT_EQ(r2.violations[0].position, 2u);
}

TEST(Icra, FileHelpers) {
    const auto dir = std::filesystem::temp_directory_path() / "icr_test_icra";
    std::filesystem::create_directories(dir);
    const auto s = AttentionSlice::zeros(1, 1, 2, {1});
    write_dump_file(query_dump_path(dir, "q7"), s);
    EXPECT_EQ(query_dump_path(dir, "q7").filename(), "q7.q.icra");
    EXPECT_EQ(calibration_dump_path(dir, "q7").filename(), "q7.cal.icra");
    EXPECT_TRUE(bitwise_equal(read_dump_file(query_dump_path(dir, "q7")).slice, s));
    try {
        read_dump_file(dir / "missing.icra");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoFailure);
    }
    std::filesystem::remove_all(dir);
}
