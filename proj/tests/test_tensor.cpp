#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fgsm/error.hpp"
#include "fgsm/rng.hpp"
#include "fgsm/tensor.hpp"

using namespace fgsm;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// Straightforward zero-padded cross-correlation, written independently of conv2d.
Tensor conv_oracle(const Tensor& x, const Tensor& k, const Tensor& b, std::size_t stride, Padding pad) {
    const long h = x.shape()[0], w = x.shape()[1], cin = x.shape()[2];
    const long kh = k.shape()[0], kw = k.shape()[1], cout = k.shape()[3];
    long oh, ow, pt = 0, pl = 0;
    if (pad == Padding::same) {
        oh = (h + stride - 1) / stride;
        ow = (w + stride - 1) / stride;
        pt = std::max(0L, (oh - 1) * long(stride) + kh - h) / 2;
        pl = std::max(0L, (ow - 1) * long(stride) + kw - w) / 2;
    } else {
        oh = (h - kh) / stride + 1;
        ow = (w - kw) / stride + 1;
    }
    Tensor out(Shape{std::size_t(oh), std::size_t(ow), std::size_t(cout)});
    for (long oy = 0; oy < oh; ++oy)
        for (long ox = 0; ox < ow; ++ox)
            for (long co = 0; co < cout; ++co) {
                double s = b[co];
                for (long ky = 0; ky < kh; ++ky)
                    for (long kx = 0; kx < kw; ++kx)
                        for (long ci = 0; ci < cin; ++ci) {
                            const long iy = oy * long(stride) + ky - pt, ix = ox * long(stride) + kx - pl;
                            if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
                            s += double(x.at(iy, ix, ci)) * k[((ky * kw + kx) * cin + ci) * cout + co];
                        }
                out.at(oy, ox, co) = float(s);
            }
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
    return s;
}

} // namespace

TEST(Shape, RendersLikeKerasSummaries) {
    EXPECT_EQ(Shape({224, 224, 3}).to_string(), "(224, 224, 3)");
    EXPECT_EQ(Shape({25088}).to_string(), "(25088)");
    EXPECT_EQ(Shape({7, 7, 512}).numel(), 25088u);
}

TEST(Shape, RejectsZeroAndEmptyDims) {
    EXPECT_THROW(Shape({3, 0}), ShapeError);
    EXPECT_THROW(Shape(std::vector<std::size_t>{}), ShapeError);
}

TEST(Tensor, DataLengthMustMatchShape) {
    EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Matmul, IdentityZeroAndHandValues) {
    Tensor a(Shape{2, 2}, {1, 2, 3, 4});
    Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
    EXPECT_EQ(matmul(a, eye), a);
    EXPECT_EQ(matmul(a, Tensor(Shape{2, 2})), Tensor(Shape{2, 2}));
    Tensor col(Shape{2, 1}, {5, 6});
    EXPECT_EQ(matmul(a, col), Tensor(Shape({2, 1}), {17, 39}));
}

TEST(Matmul, MismatchNamesBothShapes) {
    try {
        matmul(Tensor(Shape{2, 3}), Tensor(Shape{2, 3}));
        FAIL();
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("(2, 3) x (2, 3)"), std::string::npos);
    }
}

TEST(Matmul, RightIdentityIsExactForRandomMatrices) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.below(6), n = 1 + rng.below(6);
        Tensor a = random_tensor(Shape{m, n}, rng, -100, 100);
        Tensor eye(Shape{n, n});
        for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1;
        EXPECT_EQ(matmul(a, eye), a);
    }
}

TEST(Conv2d, UnitKernelIsIdentity) {
    Rng rng(3);
    Tensor x = random_tensor(Shape{5, 4, 2}, rng, 0, 1);
    Tensor k(Shape{1, 1, 2, 2});
    k[0] = 1;  // (ci=0, co=0)
    k[3] = 1;  // (ci=1, co=1)
    EXPECT_EQ(conv2d(x, k, Tensor(Shape{2}), 1, Padding::same), x);
}

TEST(Conv2d, Vgg16FirstLayerShape) {
    Tensor x(Shape{224, 224, 3}, 0.5f);
    Tensor k(Shape{3, 3, 3, 64});
    EXPECT_EQ(conv2d(x, k, Tensor(Shape{64}), 1, Padding::same).shape(), Shape({224, 224, 64}));
}

TEST(Conv2d, ConstantImageAllOnesValidKernel) {
    const float c = 0.25f;
    const std::size_t cin = 3;
    Tensor x(Shape{6, 5, cin}, c);
    Tensor k(Shape{3, 3, cin, 2}, 1.0f);
    Tensor y = conv2d(x, k, Tensor(Shape{2}), 1, Padding::valid);
    ASSERT_EQ(y.shape(), Shape({4, 3, 2}));
    for (float v : y.values()) EXPECT_FLOAT_EQ(v, 9 * c * cin);
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
    EXPECT_THROW(conv2d(Tensor(Shape{4, 4, 3}), Tensor(Shape{3, 3, 2, 4}), Tensor(Shape{4}), 1, Padding::same),
                 ShapeError);
}

TEST(Conv2d, MatchesBruteForceOracleAcrossStridesAndPadding) {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t h = 3 + rng.below(6), w = 3 + rng.below(6), cin = 1 + rng.below(3),
                          cout = 1 + rng.below(4), ks = 1 + rng.below(3), stride = 1 + rng.below(3);
        const Padding pad = rng.bernoulli(0.5) ? Padding::same : Padding::valid;
        Tensor x = random_tensor(Shape{h, w, cin}, rng);
        Tensor k = random_tensor(Shape{ks, ks, cin, cout}, rng);
        Tensor b = random_tensor(Shape{cout}, rng);
        Tensor got = conv2d(x, k, b, stride, pad);
        Tensor want = conv_oracle(x, k, b, stride, pad);
        ASSERT_EQ(got.shape(), want.shape());
        EXPECT_LT(max_abs_diff(got, want), 1e-5f);
        if (pad == Padding::same && stride == 1) {
            EXPECT_EQ(got.shape()[0], h);
            EXPECT_EQ(got.shape()[1], w);
        }
    }
}

// conv2d is bilinear in (input, kernels), so its backward pass must be the adjoint:
// <conv(x, K), g> == <x, dX(g)> == <K, dK(g)>.
TEST(Conv2d, BackwardIsAdjointOfForward) {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t h = 3 + rng.below(5), w = 3 + rng.below(5), cin = 1 + rng.below(3),
                          cout = 1 + rng.below(3), ks = 1 + rng.below(3), stride = 1 + rng.below(2);
        const Padding pad = rng.bernoulli(0.5) ? Padding::same : Padding::valid;
        Tensor x = random_tensor(Shape{h, w, cin}, rng);
        Tensor k = random_tensor(Shape{ks, ks, cin, cout}, rng);
        Tensor y = conv2d(x, k, Tensor(Shape{cout}), stride, pad);
        Tensor g = random_tensor(y.shape(), rng);
        Conv2dGrads grads = conv2d_backward(x, k, stride, pad, g);
        const double lhs = dot(y, g);
        EXPECT_NEAR(dot(x, grads.input), lhs, 1e-4 * (1 + std::fabs(lhs)));
        EXPECT_NEAR(dot(k, grads.kernels), lhs, 1e-4 * (1 + std::fabs(lhs)));
        double gsum = 0;
        for (float v : g.values()) gsum += v;
        double bsum = 0;
        for (float v : grads.bias.values()) bsum += v;
        EXPECT_NEAR(bsum, gsum, 1e-4);
    }
}

TEST(MaxPool, Vgg16Transition) {
    EXPECT_EQ(maxpool2d(Tensor(Shape{224, 224, 64}), 2, 2).shape(), Shape({112, 112, 64}));
}

TEST(MaxPool, ConstantInConstantOut) {
    Tensor y = maxpool2d(Tensor(Shape{6, 6, 2}, 0.3f), 2, 2);
    for (float v : y.values()) EXPECT_EQ(v, 0.3f);
}

TEST(MaxPool, WindowMaximum) {
    Tensor x(Shape{2, 2, 1}, {1, 2, 3, 4});
    EXPECT_EQ(maxpool2d(x, 2, 2)[0], 4.0f);
}

TEST(MaxPool, OddExtentsFloor) {
    EXPECT_EQ(maxpool2d(Tensor(Shape{5, 7, 1}), 2, 2).shape(), Shape({2, 3, 1}));
}

TEST(MaxPool, WindowLargerThanInputIsShapeError) {
    EXPECT_THROW(maxpool2d(Tensor(Shape{1, 4, 1}), 2, 2), ShapeError);
}

TEST(MaxPool, BackwardRoutesToArgmax) {
    Tensor x(Shape{2, 2, 1}, {1, 5, 3, 4});
    PoolResult r = maxpool2d_with_indices(x, 2, 2);
    Tensor g = maxpool2d_backward(x.shape(), r.argmax, Tensor(Shape{1, 1, 1}, 2.0f));
    EXPECT_EQ(g, Tensor(Shape({2, 2, 1}), {0, 2, 0, 0}));
}

TEST(Sign, ZeroMapsToZero) {
    Tensor s = sign(Tensor(Shape{3}, {0.0f, -3.2f, 0.5f}));
    EXPECT_EQ(s, Tensor(Shape({3}), {0, -1, 1}));
    EXPECT_EQ(sign(Tensor(Shape{1}, {-0.0f}))[0], 0.0f);
}

TEST(Sign, TimesValueIsAbsoluteValue) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor t = random_tensor(Shape{17}, rng, -5, 5);
        if (trial % 5 == 0) t[3] = 0.0f;
        Tensor s = sign(t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            EXPECT_TRUE(s[i] == -1.0f || s[i] == 0.0f || s[i] == 1.0f);
            EXPECT_EQ(s[i] * t[i], std::fabs(t[i]));
        }
    }
}

TEST(Clip, ClampsAndIsIdempotent) {
    Tensor t(Shape{4}, {1.2f, -0.05f, 0.3f, 1.0f});
    Tensor c = clip(t, 0, 1);
    EXPECT_EQ(c, Tensor(Shape({4}), {1.0f, 0.0f, 0.3f, 1.0f}));
    EXPECT_EQ(clip(c, 0, 1), c);
    EXPECT_THROW(clip(t, 1, 0), ArgumentError);
}

TEST(Clip, RandomOutputsStayInRange) {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const float lo = float(rng.uniform(-1, 0)), hi = float(rng.uniform(0, 1));
        Tensor c = clip(random_tensor(Shape{33}, rng, -3, 3), lo, hi);
        for (float v : c.values()) {
            EXPECT_GE(v, lo);
            EXPECT_LE(v, hi);
        }
        EXPECT_EQ(clip(c, lo, hi), c);
    }
}

TEST(TensorFormat, HeaderLayoutAndRoundtrip) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::size_t> dims(1 + rng.below(4));
        for (auto& d : dims) d = 1 + rng.below(5);
        Tensor t = random_tensor(Shape(dims), rng, -1e6, 1e6);
        std::stringstream ss;
        write_tensor(ss, t);
        const std::string bytes = ss.str();
        ASSERT_EQ(bytes.substr(0, 4), "TNSR");
        EXPECT_EQ(static_cast<unsigned char>(bytes[4]), dims.size());
        EXPECT_EQ(bytes.size(), 5 + 4 * dims.size() + 4 * t.size());
        EXPECT_EQ(read_tensor(ss), t);
    }
}

TEST(TensorFormat, LittleEndianEncoding) {
    std::stringstream ss;
    write_tensor(ss, Tensor(Shape{2}, {1.0f, -2.0f}));
    const std::string b = ss.str();
    const std::string expected("TNSR\x01\x02\x00\x00\x00\x00\x00\x80\x3f\x00\x00\x00\xc0", 17);
    EXPECT_EQ(b, expected);
}

TEST(TensorFormat, CorruptInputIsFormatError) {
    std::stringstream bad_magic("TNSX\x01\x01\x00\x00\x00");
    EXPECT_THROW(read_tensor(bad_magic), FormatError);
    std::stringstream truncated(std::string("TNSR\x01\x02\x00\x00\x00\x00\x00", 11));
    EXPECT_THROW(read_tensor(truncated), FormatError);
}
