#ifndef BBPD_OUTPUT_HPP
#define BBPD_OUTPUT_HPP

#include <bbpd/scenario.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace bbpd
{

class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double( double v )
{
    char buf[32];
    std::snprintf( buf, sizeof buf, "%.17g", v );
    return buf;
}

namespace detail
{

inline std::ofstream open_output( const std::filesystem::path& path )
{
    std::ofstream out( path, std::ios::binary | std::ios::trunc );
    if ( !out )
        throw IoError( "cannot open " + path.string() + " for writing" );
    return out;
}

inline void check_stream( const std::ofstream& out, const std::filesystem::path& path )
{
    if ( !out )
        throw IoError( "write to " + path.string() + " failed" );
}

inline const char* axis_name( int a ) { return a == 0 ? "x" : a == 1 ? "y" : "z"; }

} // namespace detail

//! Header of series.csv; momentum columns are truncated to `dim`.
inline std::string series_header( int dim )
{
    std::string h = "t,kinetic,potential,total";
    for ( int a = 0; a < dim; ++a )
        h += std::string( ",p" ) + detail::axis_name( a );
    return h + ",damage_mean";
}

//! Header of a snapshot: positions, displacements, velocities, damage.
inline std::string snapshot_header( int dim )
{
    std::string h;
    for ( int a = 0; a < dim; ++a )
        h += std::string( a ? "," : "" ) + detail::axis_name( a );
    for ( const char* p : { "u", "v" } )
        for ( int a = 0; a < dim; ++a )
            h += std::string( "," ) + p + detail::axis_name( a );
    return h + ",damage";
}

//! Appends one row per recorded frame to series.csv.
class SeriesWriter
{
  public:
    SeriesWriter( std::filesystem::path path, int dim )
        : path_( std::move( path ) )
        , dim_( dim )
        , out_( detail::open_output( path_ ) )
    {
        out_ << series_header( dim_ ) << '\n';
        detail::check_stream( out_, path_ );
    }

    void write( const Frame& f )
    {
        std::string row = format_double( f.t ) + "," + format_double( f.energy.kinetic ) +
                          "," + format_double( f.energy.potential ) + "," +
                          format_double( f.energy.total );
        for ( int a = 0; a < dim_; ++a )
            row += "," + format_double( f.momentum[a] );
        row += "," + format_double( mean( f.damage ) );
        out_ << row << '\n';
        out_.flush();
        detail::check_stream( out_, path_ );
    }

  private:
    std::filesystem::path path_;
    int dim_;
    std::ofstream out_;
};

//! Write snap_<step>.csv with 3 dim + 1 columns, rows in point order.
inline void write_snapshot( const std::filesystem::path& path, const Frame& f )
{
    const PointCloud& cloud = *f.cloud;
    const int dim = cloud.dim;
    auto out = detail::open_output( path );
    out << snapshot_header( dim ) << '\n';
    for ( std::size_t i = 0; i < cloud.size(); ++i )
    {
        std::string row;
        for ( int a = 0; a < dim; ++a )
            row += ( a ? "," : "" ) + format_double( cloud.positions[i][a] );
        for ( int a = 0; a < dim; ++a )
            row += "," + format_double( f.u[i][a] );
        for ( int a = 0; a < dim; ++a )
            row += "," + format_double( f.v[i][a] );
        row += "," + format_double( f.damage[i] );
        out << row << '\n';
    }
    out.flush();
    detail::check_stream( out, path );
}

inline std::filesystem::path snapshot_path( const std::filesystem::path& dir,
                                            std::size_t step )
{
    return dir / ( "snap_" + std::to_string( step ) + ".csv" );
}

//! Files produced by a run.
struct RunOutputs
{
    std::filesystem::path series;
    std::vector<std::filesystem::path> snapshots;
    std::size_t steps = 0;
    double t_end = 0.0;
    EnergyReport final_energy;
};

namespace detail
{

inline FrameObserver output_observer( const RunConfig& cfg,
                                      const std::filesystem::path& dir,
                                      SeriesWriter& series, RunOutputs& result,
                                      std::ofstream* kinetic )
{
    return [&cfg, dir, &series, &result, kinetic]( const Frame& f ) {
        series.write( f );
        const std::size_t every = cfg.output.snapshot_every;
        if ( f.step == 0 || f.last || ( every > 0 && f.step % every == 0 ) )
        {
            result.snapshots.push_back( snapshot_path( dir, f.step ) );
            write_snapshot( result.snapshots.back(), f );
        }
        if ( kinetic )
        {
            const double n = static_cast<double>( f.cloud->size() );
            const double ratio = f.energy.initial_total != 0.0
                                     ? f.energy.kinetic / f.energy.initial_total
                                     : 0.0;
            *kinetic << format_double( f.t ) << ',' << format_double( f.energy.kinetic / n )
                     << ',' << format_double( ratio ) << '\n';
        }
        result.steps = f.step;
        result.t_end = f.t;
        result.final_energy = f.energy;
    };
}

inline std::filesystem::path prepare_dir( const std::filesystem::path& dir )
{
    std::error_code ec;
    std::filesystem::create_directories( dir, ec );
    if ( ec )
        throw IoError( "cannot create output directory " + dir.string() + ": " +
                       ec.message() );
    return dir;
}

} // namespace detail

/*!
  \brief Run a bond-based configuration and write series.csv plus
  snap_<step>.csv files (step 0, every snapshot_every steps, last step).
*/
inline RunOutputs write_outputs( const RunConfig& cfg, const std::filesystem::path& dir )
{
    detail::prepare_dir( dir );
    RunOutputs result;
    result.series = dir / "series.csv";
    SeriesWriter series( result.series, cfg.domain.dim );
    run_solid( cfg, detail::output_observer( cfg, dir, series, result, nullptr ) );
    return result;
}

/*!
  \brief Fading-memory counterpart of write_outputs; additionally writes
  kinetic.csv with the mean kinetic energy per particle and its ratio to
  the initial total energy.
*/
inline RunOutputs write_fluid_outputs( const RunConfig& cfg,
                                       const std::filesystem::path& dir )
{
    detail::prepare_dir( dir );
    RunOutputs result;
    result.series = dir / "series.csv";
    SeriesWriter series( result.series, cfg.domain.dim );
    auto kinetic = detail::open_output( dir / "kinetic.csv" );
    kinetic << "t,kinetic_mean,decay\n";
    run_fluid( cfg, detail::output_observer( cfg, dir, series, result, &kinetic ) );
    kinetic.flush();
    detail::check_stream( kinetic, dir / "kinetic.csv" );
    return result;
}

} // namespace bbpd

#endif // BBPD_OUTPUT_HPP
