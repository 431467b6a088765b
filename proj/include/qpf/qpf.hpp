#pragma once

#include "qpf/core.hpp"
#include "qpf/grid/case.hpp"
#include "qpf/grid/power_flow.hpp"
#include "qpf/classical/newton.hpp"
#include "qpf/qsim/pauli.hpp"
#include "qpf/qsim/state_vector.hpp"
#include "qpf/qsim/depth.hpp"
#include "qpf/qsim/circuits.hpp"
#include "qpf/qsim/evolution.hpp"
#include "qpf/qsim/phase_estimation.hpp"
#include "qpf/lcu/lcu.hpp"
#include "qpf/shadows/shadows.hpp"
#include "qpf/hhl/hhl.hpp"
#include "qpf/variational/ansatz.hpp"
#include "qpf/variational/vqls.hpp"
#include "qpf/variational/vqpf.hpp"
#include "qpf/resources/resources.hpp"
#include "qpf/fixtures.hpp"
