#include <doctest.h>

#include "layoutkit/geometry.hpp"
#include "layoutkit/rng.hpp"

using namespace layoutkit;

TEST_CASE("quantize maps pixel-derived fractions to bins") {
    // box (50,100,150,200) on a 1000x2000 page
    BBox b{50.0 / 1000, 100.0 / 2000, 150.0 / 1000, 200.0 / 2000};
    QuantBox q = quantize(b);
    CHECK(q == QuantBox{50, 50, 150, 100});

    BBox full{0, 0, 1, 1};
    CHECK(quantize(full) == QuantBox{0, 0, 1000, 1000});
}

TEST_CASE("quantize(dequantize(q)) is the identity") {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        QuantBox q;
        q.x1 = static_cast<int>(rng.below(1001));
        q.x2 = q.x1 + static_cast<int>(rng.below(static_cast<uint64_t>(1001 - q.x1)));
        q.y1 = static_cast<int>(rng.below(1001));
        q.y2 = q.y1 + static_cast<int>(rng.below(static_cast<uint64_t>(1001 - q.y1)));
        CHECK(quantize(dequantize(q)) == q);
    }
}

TEST_CASE("dequantize error is at most half a bin per coordinate") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        BBox b;
        b.x1 = rng.uniform();
        b.x2 = b.x1 + (1.0 - b.x1) * rng.uniform();
        b.y1 = rng.uniform();
        b.y2 = b.y1 + (1.0 - b.y1) * rng.uniform();
        const BBox r = dequantize(quantize(b));
        CHECK(std::abs(r.x1 - b.x1) <= 1.0 / kCoordBins);
        CHECK(std::abs(r.y1 - b.y1) <= 1.0 / kCoordBins);
        CHECK(std::abs(r.x2 - b.x2) <= 1.0 / kCoordBins);
        CHECK(std::abs(r.y2 - b.y2) <= 1.0 / kCoordBins);
    }
}

TEST_CASE("same_line requires >50% overlap of the smaller interval") {
    BBox a{0.0, 0.10, 0.3, 0.20};
    BBox b{0.5, 0.14, 0.9, 0.24};  // overlap 0.06 of 0.10
    CHECK(same_line(a, b));
    BBox c{0.5, 0.16, 0.9, 0.30};  // overlap 0.04 of min(0.10, 0.14)
    CHECK_FALSE(same_line(a, c));
    BBox d{0.5, 0.30, 0.9, 0.40};
    CHECK_FALSE(same_line(a, d));
}

TEST_CASE("box joins and areas") {
    BBox a{0.1, 0.1, 0.3, 0.2};
    BBox b{0.2, 0.15, 0.5, 0.4};
    BBox u = BBox::join(a, b);
    CHECK(u == BBox{0.1, 0.1, 0.5, 0.4});
    CHECK(a.area() == doctest::Approx(0.02));
    CHECK(a.valid_unit());
    CHECK_FALSE(BBox{0.4, 0.1, 0.3, 0.2}.valid_unit());
}
