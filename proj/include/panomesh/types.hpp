#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace panomesh {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double px, double py) : x(px), y(py) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double norm() const { return std::hypot(x, y); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct PointPair {
    Vec2 src;
    Vec2 dst;
};

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    bool contains(double px, double py) const {
        return px >= x && py >= y && px < x + w && py < y + h;
    }
};

// Error hierarchy. Every failure the spec names maps to one of these.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInput : Error { using Error::Error; };
struct NoConsensus : Error { using Error::Error; };
struct AtInfinity : Error { using Error::Error; };
struct EmptyFrame : Error { using Error::Error; };
struct SizeMismatch : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct TooFewPairs : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct FrameMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonContiguousFrames : Error { using Error::Error; };
struct NonFiniteEnergy : Error { using Error::Error; };
struct DegenerateQuad : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct NoMatches : Error { using Error::Error; };
struct TooSmall : Error { using Error::Error; };
struct WindowOutOfScene : Error { using Error::Error; };
struct InsufficientTexture : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };

}  // namespace panomesh
