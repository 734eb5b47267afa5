#ifndef BBPD_BBPD_HPP
#define BBPD_BBPD_HPP

#include <bbpd/axioms.hpp>
#include <bbpd/config.hpp>
#include <bbpd/diagnostics.hpp>
#include <bbpd/discretization.hpp>
#include <bbpd/dynamics.hpp>
#include <bbpd/fluidpd.hpp>
#include <bbpd/kernels.hpp>
#include <bbpd/output.hpp>
#include <bbpd/scenario.hpp>
#include <bbpd/vec.hpp>

#endif // BBPD_BBPD_HPP
