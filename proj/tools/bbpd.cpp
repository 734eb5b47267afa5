// Command-line driver: run, fluid-run, convergence, kernel-check, print-config.

#include <bbpd/bbpd.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace
{

constexpr int exit_check_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

bbpd::RunConfig load_config( const std::string& path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw bbpd::ConfigError( "", "", 0, "cannot read config file " + path );
    std::ostringstream text;
    text << in.rdbuf();
    return bbpd::parse_config( text.str() );
}

std::string output_dir( const std::string& flag, const bbpd::RunConfig& cfg )
{
    if ( !flag.empty() )
        return flag;
    if ( const char* env = std::getenv( "BBPD_OUTPUT_DIR" ); env && *env )
        return env;
    return cfg.output.directory;
}

void print_run( const bbpd::RunOutputs& out )
{
    std::printf( "steps %zu  t %s  energy %s  snapshots %zu\n", out.steps,
                 bbpd::format_double( out.t_end ).c_str(),
                 bbpd::format_double( out.final_energy.total ).c_str(),
                 out.snapshots.size() );
    std::printf( "wrote %s\n", out.series.string().c_str() );
}

} // namespace

int main( int argc, char** argv )
{
    CLI::App app{ "Bond-based peridynamics simulations and checks" };
    app.require_subcommand( 1 );

    std::string config_path, out_flag;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand( "run", "Run a bond-based simulation" );
    run->add_option( "--config,-c", config_path, "Run configuration" )->required();
    run->add_option( "--out,-o", out_flag, "Output directory" );

    auto* fluid = app.add_subcommand( "fluid-run", "Run the fading-memory model" );
    fluid->add_option( "--config,-c", config_path, "Run configuration" )->required();
    fluid->add_option( "--out,-o", out_flag, "Output directory" );

    std::vector<double> deltas{ 0.2, 0.1, 0.05 };
    double m = 4.0;
    auto* conv = app.add_subcommand( "convergence",
                                     "Horizon convergence on the periodic wave bar" );
    conv->add_option( "--delta", deltas, "Horizons, coarse to fine" );
    conv->add_option( "--m", m, "Horizon-to-spacing ratio" );

    int samples = 1000;
    auto* check = app.add_subcommand( "kernel-check", "Sample kernel axioms" );
    check->add_option( "--config,-c", config_path,
                       "Take the kernel from a configuration (default: 3D PMB)" );
    check->add_option( "--samples", samples, "Random bonds to sample" );
    check->add_option( "--seed", seed, "Random seed" );

    auto* print = app.add_subcommand( "print-config", "Echo the normalized configuration" );
    print->add_option( "--config,-c", config_path, "Run configuration" )->required();

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError& e )
    {
        return app.exit( e ) == 0 ? 0 : exit_config;
    }

    try
    {
        if ( *print )
        {
            std::fputs( bbpd::print_config( load_config( config_path ) ).c_str(), stdout );
            return 0;
        }
        if ( *run || *fluid )
        {
            const auto cfg = load_config( config_path );
            const auto dir = output_dir( out_flag, cfg );
            print_run( *run ? bbpd::write_outputs( cfg, dir )
                            : bbpd::write_fluid_outputs( cfg, dir ) );
            return 0;
        }
        if ( *conv )
        {
            const auto r = bbpd::delta_convergence( bbpd::WaveBar{}, deltas, m );
            std::printf( "%-12s %-12s %-14s %s\n", "delta", "h", "error", "rate" );
            for ( std::size_t k = 0; k < r.points.size(); ++k )
            {
                char rate[32] = "-";
                if ( k > 0 )
                    std::snprintf( rate, sizeof rate, "%.4f",
                                   std::log( r.points[k - 1].error / r.points[k].error ) /
                                       std::log( r.points[k - 1].delta / r.points[k].delta ) );
                std::printf( "%-12.6g %-12.6g %-14.6e %s\n", r.points[k].delta,
                             r.points[k].spacing, r.points[k].error, rate );
            }
            std::printf( "fitted rate %.4f  strictly decreasing %s\n", r.rate,
                         r.strictly_decreasing ? "yes" : "no" );
            return r.strictly_decreasing ? 0 : exit_check_failed;
        }
        if ( *check )
        {
            bbpd::KernelModel model;
            int dim = 3;
            if ( !config_path.empty() )
            {
                const auto cfg = load_config( config_path );
                model = bbpd::make_kernel( cfg );
                dim = cfg.domain.dim;
            }
            else
                model = bbpd::PMB{ { bbpd::MicroModulusFamily::cylindrical,
                                     bbpd::calibrate_pmb_c( 1.0, 1.0 ), 1.0 },
                                   {} };
            const auto rep = bbpd::check_kernel_axioms( model, dim, samples, seed );
            const bbpd::AxiomTolerances tol;
            std::printf( "family           %s\n", rep.family.c_str() );
            std::printf( "samples          %d (seed %llu)\n", rep.samples,
                         static_cast<unsigned long long>( seed ) );
            std::printf( "antisymmetry     %.3e  (< %.0e)\n", rep.max_antisymmetry,
                         tol.antisymmetry );
            std::printf( "collinearity     %.3e  (< %.0e)\n", rep.max_collinearity,
                         tol.collinearity );
            std::printf( "gradient         %.3e  (< %.0e, %d samples, %d skipped)\n",
                         rep.max_gradient, tol.gradient, rep.gradient_samples,
                         rep.discontinuities );
            const bool ok = rep.passed( tol );
            std::printf( "%s\n", ok ? "ok" : "FAILED" );
            return ok ? 0 : exit_check_failed;
        }
    }
    catch ( const bbpd::InputError& e )
    {
        std::fprintf( stderr, "config error: %s\n", e.what() );
        return exit_config;
    }
    catch ( const std::exception& e )
    {
        std::fprintf( stderr, "error: %s\n", e.what() );
        return exit_runtime;
    }
    return 0;
}
