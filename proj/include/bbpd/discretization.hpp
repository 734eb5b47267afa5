#ifndef BBPD_DISCRETIZATION_HPP
#define BBPD_DISCRETIZATION_HPP

#include <bbpd/vec.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bbpd
{

//! Relative slack used when comparing a bond length against the horizon.
//! Lattice offsets such as 4h are computed as differences of cell centres and
//! land within a few ulps of delta; they belong to the horizon.
inline constexpr double horizon_tolerance = 1e-10;

//---------------------------------------------------------------------------//
//! Discretized reference configuration: cell-centred points with volumes.
//---------------------------------------------------------------------------//
struct PointCloud
{
    int dim = 1;
    std::vector<Vec3> positions;
    std::vector<double> volumes;
    double density = 1.0;
    //! Lower corner and edge lengths of the enclosing box.
    Vec3 origin;
    Vec3 box;
    std::array<bool, 3> periodic{ false, false, false };
    //! Lattice spacing for uniform grids, zero otherwise.
    double spacing = 0.0;

    std::size_t size() const { return positions.size(); }

    double total_volume() const
    {
        double v = 0.0;
        for ( double vi : volumes )
            v += vi;
        return v;
    }

    double mass( std::size_t i ) const { return density * volumes[i]; }
};

//! Shortest periodic image of a separation vector.
inline Vec3 minimum_image( Vec3 d, const Vec3& box,
                           const std::array<bool, 3>& periodic, int dim )
{
    for ( int a = 0; a < dim; ++a )
        if ( periodic[a] )
            d[a] -= box[a] * std::round( d[a] / box[a] );
    return d;
}

//! Wrap a position back into a periodic box.
inline Vec3 wrap_position( Vec3 x, const Vec3& origin, const Vec3& box,
                           const std::array<bool, 3>& periodic, int dim )
{
    for ( int a = 0; a < dim; ++a )
    {
        if ( !periodic[a] )
            continue;
        double rel = x[a] - origin[a];
        rel -= box[a] * std::floor( rel / box[a] );
        x[a] = origin[a] + rel;
    }
    return x;
}

/*!
  \brief Uniform lattice of cell centres covering [0, box) in each of the
  first `dim` axes.

  Every box length must be an integer multiple of the spacing.
*/
inline PointCloud build_grid( int dim, const Vec3& box, double spacing,
                              double density,
                              const std::array<bool, 3>& periodic = {
                                  false, false, false } )
{
    if ( dim < 1 || dim > 3 )
        throw InputError( "build_grid: dim must be 1, 2 or 3" );
    if ( !( spacing > 0.0 ) )
        throw InputError( "build_grid: spacing must be positive" );
    if ( !( density > 0.0 ) )
        throw InputError( "build_grid: density must be positive" );

    std::array<std::size_t, 3> counts{ 1, 1, 1 };
    for ( int a = 0; a < dim; ++a )
    {
        if ( !( box[a] > 0.0 ) )
            throw InputError( "build_grid: box lengths must be positive" );
        const double ratio = box[a] / spacing;
        const double rounded = std::round( ratio );
        if ( rounded < 1.0 ||
             std::abs( ratio - rounded ) > 1e-9 * std::max( 1.0, ratio ) )
            throw InputError( "build_grid: box length " +
                              std::to_string( box[a] ) +
                              " is not a positive integer multiple of the "
                              "spacing " +
                              std::to_string( spacing ) );
        counts[a] = static_cast<std::size_t>( rounded );
    }

    PointCloud cloud;
    cloud.dim = dim;
    cloud.density = density;
    cloud.spacing = spacing;
    cloud.periodic = { false, false, false };
    for ( int a = 0; a < dim; ++a )
    {
        cloud.box[a] = box[a];
        cloud.periodic[a] = periodic[a];
    }

    const double cell_volume = std::pow( spacing, dim );
    const std::size_t n = counts[0] * counts[1] * counts[2];
    cloud.positions.reserve( n );
    cloud.volumes.assign( n, cell_volume );
    // x fastest, then y, then z.
    for ( std::size_t k = 0; k < counts[2]; ++k )
        for ( std::size_t j = 0; j < counts[1]; ++j )
            for ( std::size_t i = 0; i < counts[0]; ++i )
            {
                Vec3 x;
                x[0] = ( static_cast<double>( i ) + 0.5 ) * spacing;
                if ( dim > 1 )
                    x[1] = ( static_cast<double>( j ) + 0.5 ) * spacing;
                if ( dim > 2 )
                    x[2] = ( static_cast<double>( k ) + 0.5 ) * spacing;
                cloud.positions.push_back( x );
            }
    return cloud;
}

//! Check the PointCloud invariants; throws InputError on violation.
inline void validate( const PointCloud& cloud )
{
    if ( cloud.dim < 1 || cloud.dim > 3 )
        throw InputError( "point cloud: dim must be 1, 2 or 3" );
    if ( !( cloud.density > 0.0 ) )
        throw InputError( "point cloud: density must be positive" );
    if ( cloud.volumes.size() != cloud.positions.size() )
        throw InputError( "point cloud: one volume per point required" );
    for ( double v : cloud.volumes )
        if ( !( v > 0.0 ) )
            throw InputError( "point cloud: volumes must be positive" );
    for ( int a = 0; a < cloud.dim; ++a )
        if ( cloud.periodic[a] && !( cloud.box[a] > 0.0 ) )
            throw InputError( "point cloud: periodic axis needs a box length" );

    std::vector<Vec3> sorted = cloud.positions;
    std::sort( sorted.begin(), sorted.end(),
               []( const Vec3& a, const Vec3& b ) { return a.c < b.c; } );
    if ( std::adjacent_find( sorted.begin(), sorted.end() ) != sorted.end() )
        throw InputError( "point cloud: positions must be pairwise distinct" );
}

//---------------------------------------------------------------------------//
// Horizon and bonds.
//---------------------------------------------------------------------------//
enum class PartialVolume
{
    none,
    linear
};

struct HorizonConfig
{
    double delta = 1.0;
    PartialVolume partial_volume = PartialVolume::linear;
    double grid_spacing = 1.0;
};

inline void validate( const HorizonConfig& cfg )
{
    if ( !( cfg.delta > 0.0 ) )
        throw InputError( "horizon: delta must be positive" );
    if ( !( cfg.grid_spacing > 0.0 ) )
        throw InputError( "horizon: grid spacing must be positive" );
    if ( cfg.delta < cfg.grid_spacing * ( 1.0 - horizon_tolerance ) )
        throw InputError( "horizon: delta/h must be >= 1 (interior horizons "
                          "would be empty)" );
}

/*!
  \brief Fraction of a neighbour cell of width h, centred at distance r,
  that lies inside a horizon of radius delta (radial linear rule).
*/
inline double partial_volume_factor( double r, double h, double delta )
{
    const double lo = delta - 0.5 * h;
    const double hi = delta + 0.5 * h;
    if ( r <= lo )
        return 1.0;
    if ( r >= hi )
        return 0.0;
    return std::clamp( ( hi - r ) / h, 0.0, 1.0 );
}

struct Bond
{
    std::size_t j = 0;
    Vec3 xi;
    double xi_norm = 0.0;
    double weight = 0.0;
};

/*!
  \brief Horizon neighbour lists in compressed row form.

  Bonds of point i occupy [offsets[i], offsets[i+1]) and are sorted by
  neighbour index. `reverse[b]` is the index of the mirrored bond (j, i).
  Immutable once built; per-bond damage lives with the integrator.
*/
struct BondNetwork
{
    std::vector<std::size_t> offsets{ 0 };
    std::vector<Bond> bonds;
    std::vector<std::size_t> reverse;
    double delta = 0.0;
    //! Set when delta < h: interior horizons are (nearly) empty.
    bool sparse_horizon_warning = false;

    std::size_t num_points() const { return offsets.size() - 1; }
    std::size_t num_bonds() const { return bonds.size(); }

    std::span<const Bond> neighbors( std::size_t i ) const
    {
        return { bonds.data() + offsets[i], offsets[i + 1] - offsets[i] };
    }
    std::size_t begin( std::size_t i ) const { return offsets[i]; }
    std::size_t end( std::size_t i ) const { return offsets[i + 1]; }
    std::size_t count( std::size_t i ) const
    {
        return offsets[i + 1] - offsets[i];
    }
};

namespace detail
{

struct CellGrid
{
    int dim = 1;
    std::array<long, 3> ncell{ 1, 1, 1 };
    Vec3 lo;
    Vec3 width{ 1.0, 1.0, 1.0 };
    std::array<bool, 3> periodic{ false, false, false };
    std::vector<std::size_t> cell_start;
    std::vector<std::size_t> cell_points;

    long flat( const std::array<long, 3>& c ) const
    {
        return c[0] + ncell[0] * ( c[1] + ncell[1] * c[2] );
    }

    std::array<long, 3> cell_of( const Vec3& x ) const
    {
        std::array<long, 3> c{ 0, 0, 0 };
        for ( int a = 0; a < dim; ++a )
        {
            long k = static_cast<long>( std::floor( ( x[a] - lo[a] ) / width[a] ) );
            if ( periodic[a] )
                k = ( ( k % ncell[a] ) + ncell[a] ) % ncell[a];
            else
                k = std::clamp( k, 0L, ncell[a] - 1 );
            c[a] = k;
        }
        return c;
    }
};

inline CellGrid make_cell_grid( std::span<const Vec3> positions, int dim,
                                const Vec3& origin, const Vec3& box,
                                const std::array<bool, 3>& periodic,
                                double cutoff )
{
    CellGrid grid;
    grid.dim = dim;
    grid.periodic = periodic;
    for ( int a = 0; a < dim; ++a )
    {
        double lo = origin[a];
        double extent = box[a];
        if ( !periodic[a] )
        {
            lo = positions.empty() ? 0.0 : positions[0][a];
            double hi = lo;
            for ( const auto& x : positions )
            {
                lo = std::min( lo, x[a] );
                hi = std::max( hi, x[a] );
            }
            extent = hi - lo;
        }
        long n = static_cast<long>( std::floor( extent / cutoff ) );
        n = std::max( n, 1L );
        grid.ncell[a] = n;
        grid.lo[a] = lo;
        grid.width[a] = extent > 0.0 ? extent / static_cast<double>( n ) : 1.0;
    }

    const std::size_t total = static_cast<std::size_t>(
        grid.ncell[0] * grid.ncell[1] * grid.ncell[2] );
    std::vector<std::size_t> cell_id( positions.size() );
    grid.cell_start.assign( total + 1, 0 );
    for ( std::size_t i = 0; i < positions.size(); ++i )
    {
        cell_id[i] = static_cast<std::size_t>(
            grid.flat( grid.cell_of( positions[i] ) ) );
        ++grid.cell_start[cell_id[i] + 1];
    }
    for ( std::size_t c = 0; c < total; ++c )
        grid.cell_start[c + 1] += grid.cell_start[c];
    grid.cell_points.resize( positions.size() );
    std::vector<std::size_t> fill( grid.cell_start.begin(),
                                   grid.cell_start.end() - 1 );
    for ( std::size_t i = 0; i < positions.size(); ++i )
        grid.cell_points[fill[cell_id[i]]++] = i;
    return grid;
}

//! Distinct cells adjacent to (and including) cell c.
inline std::vector<long> adjacent_cells( const CellGrid& grid,
                                         const std::array<long, 3>& c )
{
    std::vector<long> out;
    std::array<long, 3> lo{ 0, 0, 0 }, hi{ 0, 0, 0 };
    for ( int a = 0; a < grid.dim; ++a )
    {
        lo[a] = -1;
        hi[a] = 1;
    }
    for ( long dz = lo[2]; dz <= hi[2]; ++dz )
        for ( long dy = lo[1]; dy <= hi[1]; ++dy )
            for ( long dx = lo[0]; dx <= hi[0]; ++dx )
            {
                std::array<long, 3> n{ c[0] + dx, c[1] + dy, c[2] + dz };
                bool inside = true;
                for ( int a = 0; a < grid.dim; ++a )
                {
                    if ( grid.periodic[a] )
                        n[a] = ( ( n[a] % grid.ncell[a] ) + grid.ncell[a] ) %
                               grid.ncell[a];
                    else if ( n[a] < 0 || n[a] >= grid.ncell[a] )
                        inside = false;
                }
                if ( inside )
                    out.push_back( grid.flat( n ) );
            }
    std::sort( out.begin(), out.end() );
    out.erase( std::unique( out.begin(), out.end() ), out.end() );
    return out;
}

inline void check_periodic_horizon( int dim, const Vec3& box,
                                    const std::array<bool, 3>& periodic,
                                    double delta )
{
    for ( int a = 0; a < dim; ++a )
        if ( periodic[a] && !( 2.0 * delta < box[a] ) )
            throw InputError( "horizon: delta must be smaller than half the "
                              "periodic box length on every periodic axis" );
}

} // namespace detail

/*!
  \brief Symmetric neighbour network for arbitrary point positions.

  Pairs with 0 <= |x_j - x_i| <= delta (minimum image on periodic axes) are
  linked, i != j. The pair offset is computed once for i < j and mirrored,
  so xi_ji == -xi_ij holds bit for bit. Coincident distinct points produce
  a zero-length bond; kernel evaluation reports it as a singular
  configuration.
*/
inline BondNetwork build_neighbor_network( std::span<const Vec3> positions,
                                           std::span<const double> volumes,
                                           int dim, const Vec3& origin,
                                           const Vec3& box,
                                           const std::array<bool, 3>& periodic,
                                           const HorizonConfig& cfg )
{
    detail::check_periodic_horizon( dim, box, periodic, cfg.delta );
    const std::size_t n = positions.size();
    const double cutoff = cfg.delta * ( 1.0 + horizon_tolerance );
    const auto grid = detail::make_cell_grid( positions, dim, origin, box,
                                              periodic, cfg.delta );

    struct Entry
    {
        std::size_t j;
        Vec3 xi;
        double r;
    };
    std::vector<std::vector<Entry>> lists( n );
    for ( std::size_t i = 0; i < n; ++i )
    {
        const auto cells = detail::adjacent_cells( grid, grid.cell_of( positions[i] ) );
        for ( long cell : cells )
        {
            for ( std::size_t k = grid.cell_start[cell];
                  k < grid.cell_start[cell + 1]; ++k )
            {
                const std::size_t j = grid.cell_points[k];
                if ( j <= i )
                    continue;
                const Vec3 d =
                    minimum_image( positions[j] - positions[i], box, periodic, dim );
                const double r = norm( d );
                if ( r <= cutoff )
                {
                    lists[i].push_back( { j, d, r } );
                    lists[j].push_back( { i, -d, r } );
                }
            }
        }
    }

    BondNetwork net;
    net.delta = cfg.delta;
    net.sparse_horizon_warning =
        cfg.delta < cfg.grid_spacing * ( 1.0 - horizon_tolerance );
    net.offsets.assign( n + 1, 0 );
    for ( std::size_t i = 0; i < n; ++i )
    {
        auto& l = lists[i];
        std::sort( l.begin(), l.end(),
                   []( const Entry& a, const Entry& b ) { return a.j < b.j; } );
        net.offsets[i + 1] = net.offsets[i] + l.size();
    }
    net.bonds.reserve( net.offsets[n] );
    for ( std::size_t i = 0; i < n; ++i )
        for ( const auto& e : lists[i] )
        {
            double w = volumes[e.j];
            if ( cfg.partial_volume == PartialVolume::linear )
                w *= partial_volume_factor( e.r, cfg.grid_spacing, cfg.delta );
            net.bonds.push_back( { e.j, e.xi, e.r, w } );
        }

    // Mirror index: bond (i, j) <-> bond (j, i). Lists are sorted by
    // neighbour, so a binary search in row j finds i.
    net.reverse.resize( net.bonds.size() );
    for ( std::size_t i = 0; i < n; ++i )
        for ( std::size_t b = net.offsets[i]; b < net.offsets[i + 1]; ++b )
        {
            const std::size_t j = net.bonds[b].j;
            auto first = net.bonds.begin() + static_cast<long>( net.offsets[j] );
            auto last = net.bonds.begin() + static_cast<long>( net.offsets[j + 1] );
            auto it = std::lower_bound(
                first, last, i,
                []( const Bond& bd, std::size_t v ) { return bd.j < v; } );
            net.reverse[b] = static_cast<std::size_t>( it - net.bonds.begin() );
        }
    return net;
}

//! Horizon network over the reference configuration.
inline BondNetwork build_bonds( const PointCloud& cloud, const HorizonConfig& cfg )
{
    if ( !( cfg.delta > 0.0 ) )
        throw InputError( "horizon: delta must be positive" );
    if ( !( cfg.grid_spacing > 0.0 ) )
        throw InputError( "horizon: grid spacing must be positive" );
    return build_neighbor_network( cloud.positions, cloud.volumes, cloud.dim,
                                   cloud.origin, cloud.box, cloud.periodic, cfg );
}

//! Sum of quadrature weights over the horizon of point i.
inline double horizon_volume( const BondNetwork& net, std::size_t i )
{
    double v = 0.0;
    for ( const auto& b : net.neighbors( i ) )
        v += b.weight;
    return v;
}

} // namespace bbpd

#endif // BBPD_DISCRETIZATION_HPP
