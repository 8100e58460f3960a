#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>
#include <string>

#include "panomesh/image.hpp"

using namespace panomesh;

namespace {

ImageU8 random_image(std::mt19937_64& rng, int w, int h) {
    ImageU8 img(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(d(rng));
    return img;
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(std::string("/tmp/panomesh_imgtest_") + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("PNG round trip is lossless") {
    std::mt19937_64 rng(3);
    const ImageU8 img = random_image(rng, 37, 23);
    TempFile f("rt.png");
    write_png(f.path, img);
    const ImageU8 back = read_png(f.path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.data == img.data);
}

TEST_CASE("PPM round trip is lossless") {
    std::mt19937_64 rng(4);
    const ImageU8 img = random_image(rng, 16, 9);
    TempFile f("rt.ppm");
    write_ppm(f.path, img);
    const ImageU8 back = read_ppm(f.path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.data == img.data);
}

TEST_CASE("read_image dispatches on extension") {
    std::mt19937_64 rng(5);
    const ImageU8 img = random_image(rng, 8, 8);
    TempFile fp("d.png"), fq("d.ppm");
    write_image(fp.path, img);
    write_image(fq.path, img);
    CHECK(read_image(fp.path).data == img.data);
    CHECK(read_image(fq.path).data == img.data);
}

TEST_CASE("missing file raises DataError") {
    CHECK_THROWS_AS(read_png("/tmp/panomesh_imgtest_does_not_exist.png"), DataError);
    CHECK_THROWS_AS(read_ppm("/tmp/panomesh_imgtest_does_not_exist.ppm"), DataError);
}

TEST_CASE("grayscale uses BT.601 luma weights") {
    ImageU8 img(2, 1);
    // pixel 0: pure red, pixel 1: pure green
    img.px(0, 0)[0] = 255;
    img.px(1, 0)[1] = 255;
    const ImageF g = to_grayscale(img);
    CHECK(g.at(0, 0) == doctest::Approx(0.299f * 255).epsilon(1e-4));
    CHECK(g.at(1, 0) == doctest::Approx(0.587f * 255).epsilon(1e-4));
}

TEST_CASE("grayscale of gray pixels is the gray level") {
    ImageU8 img(1, 1);
    img.px(0, 0)[0] = img.px(0, 0)[1] = img.px(0, 0)[2] = 100;
    CHECK(to_grayscale(img).at(0, 0) == doctest::Approx(100.0f).epsilon(1e-4));
}

TEST_CASE("bilinear sampling interpolates and clamps") {
    ImageF img(2, 2);
    img.at(0, 0) = 0;
    img.at(1, 0) = 10;
    img.at(0, 1) = 20;
    img.at(1, 1) = 30;
    CHECK(sample_bilinear(img, 0, 0) == doctest::Approx(0.0f));
    CHECK(sample_bilinear(img, 1, 1) == doctest::Approx(30.0f));
    CHECK(sample_bilinear(img, 0.5, 0.5) == doctest::Approx(15.0f));
    CHECK(sample_bilinear(img, 0.5, 0.0) == doctest::Approx(5.0f));
    // out-of-bounds clamps to the border value
    CHECK(sample_bilinear(img, -5, -5) == doctest::Approx(0.0f));
    CHECK(sample_bilinear(img, 9, 9) == doctest::Approx(30.0f));
}

TEST_CASE("bilinear RGB sampling interpolates per channel") {
    ImageU8 img(2, 1);
    img.px(0, 0)[0] = 100;
    img.px(1, 0)[0] = 200;
    double out[3];
    sample_bilinear_rgb(img, 0.25, 0.0, out);
    CHECK(out[0] == doctest::Approx(125.0));
    CHECK(out[1] == doctest::Approx(0.0));
}
