#ifndef BBPD_VEC_HPP
#define BBPD_VEC_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace bbpd
{

//! Invalid user input (bad configuration, violated precondition).
class InputError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Two deformed points coincide where a unit bond direction is required.
class SingularConfiguration : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Failure while advancing a simulation (non-finite state, missing history).
class SimulationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
// Small fixed-size vector. Lower-dimensional problems keep the unused
// trailing components at exactly zero, so every operation below is valid in
// 1D, 2D and 3D without branching on the dimension.
//---------------------------------------------------------------------------//
struct Vec3
{
    std::array<double, 3> c{ 0.0, 0.0, 0.0 };

    constexpr Vec3() = default;
    constexpr Vec3( double x, double y = 0.0, double z = 0.0 )
        : c{ x, y, z }
    {
    }

    constexpr double& operator[]( std::size_t i ) { return c[i]; }
    constexpr double operator[]( std::size_t i ) const { return c[i]; }

    friend constexpr bool operator==( const Vec3&, const Vec3& ) = default;
};

constexpr Vec3 operator+( const Vec3& a, const Vec3& b )
{
    return { a[0] + b[0], a[1] + b[1], a[2] + b[2] };
}
constexpr Vec3 operator-( const Vec3& a, const Vec3& b )
{
    return { a[0] - b[0], a[1] - b[1], a[2] - b[2] };
}
constexpr Vec3 operator-( const Vec3& a ) { return { -a[0], -a[1], -a[2] }; }
constexpr Vec3 operator*( double s, const Vec3& a )
{
    return { s * a[0], s * a[1], s * a[2] };
}
constexpr Vec3 operator*( const Vec3& a, double s ) { return s * a; }
constexpr Vec3 operator/( const Vec3& a, double s )
{
    return { a[0] / s, a[1] / s, a[2] / s };
}
constexpr Vec3& operator+=( Vec3& a, const Vec3& b )
{
    a[0] += b[0];
    a[1] += b[1];
    a[2] += b[2];
    return a;
}
constexpr Vec3& operator-=( Vec3& a, const Vec3& b )
{
    a[0] -= b[0];
    a[1] -= b[1];
    a[2] -= b[2];
    return a;
}

constexpr double dot( const Vec3& a, const Vec3& b )
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

constexpr Vec3 cross( const Vec3& a, const Vec3& b )
{
    return { a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
             a[0] * b[1] - a[1] * b[0] };
}

inline double norm( const Vec3& a ) { return std::sqrt( dot( a, a ) ); }

inline bool is_finite( const Vec3& a )
{
    return std::isfinite( a[0] ) && std::isfinite( a[1] ) &&
           std::isfinite( a[2] );
}

} // namespace bbpd

#endif // BBPD_VEC_HPP
