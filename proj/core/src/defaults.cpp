#include "spinline/runner.hpp"

namespace spinline {

// Default device + experiment definitions. The electrostatic numbers (lever
// arms, charging energies, reference potentials, loading tables) are
// fictional but plausible calibration values chosen so that the operating
// point holds the (9-3), (3-3), (3-7), (3-1) control occupations; qubit
// frequencies, Rabi rates, coherence times and the exchange slope follow the
// measured device. ou_sigma_hz is calibrated so the OU-limited Hahn echo
// decays to 1/e at 1.31 ms with ou_tau_s = 0.01.
const std::string& default_config_text() {
    static const std::string text = R"CFG(# spinline default device configuration
[device]
n_dots = 8
plungers = P1 P2 P3 P4 P5 P6 P7 P8
barriers = J1 J2 J3 J4 J5 J6 J7
sensors = SET1 SET2
charging_energy_mev = 5.0 7.0 7.5 7.5 8.0 6.0 7.0 9.0
mutual_charging_mev = 1.5 2.0 1.8 2.2
reference_potential_mev = 984.5 985.5 991.5 991.5 983.4 972.6 996.8 1018.4
occupancy_max = 25 25 25 25 25 25 25 25

[lever_arms]
dot1 = P1:0.40 P2:0.08 J1:0.10 SET1:0.03
dot2 = P2:0.40 P1:0.08 J1:0.10 J2:0.05 P3:0.02
dot3 = P3:0.40 P4:0.08 J3:0.10 J2:0.05 P2:0.02
dot4 = P4:0.40 P3:0.08 J3:0.10 J4:0.05 P5:0.02
dot5 = P5:0.40 P6:0.08 J5:0.10 J4:0.05 P4:0.02
dot6 = P6:0.40 P5:0.08 J5:0.10 J6:0.05 P7:0.02
dot7 = P7:0.40 P8:0.08 J7:0.10 J6:0.05 P6:0.02
dot8 = P8:0.40 P7:0.08 J7:0.10 SET2:0.03

[operating_point]
P1 = 1.800
P2 = 1.800
P3 = 1.800
P4 = 1.800
P5 = 1.800
P6 = 1.800
P7 = 1.800
P8 = 1.800
J1 = 1.400
J2 = -0.400
J3 = 1.400
J4 = -0.400
J5 = 1.400
J6 = -0.400
J7 = 1.400
SET1 = 1.000
SET2 = 1.000

[field]
b0_tesla = 0.5
b1_scale = 1.0

[qubit 1]
g_factor = 1.998000
rabi_hz = 141.0e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 2]
g_factor = 1.999950
rabi_hz = 150.0e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 3]
g_factor = 1.998070
rabi_hz = 158.5e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 4]
g_factor = 1.999990
rabi_hz = 167.0e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 5]
g_factor = 1.998040
rabi_hz = 176.0e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 6]
g_factor = 2.000170
rabi_hz = 185.5e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 7]
g_factor = 1.998100
rabi_hz = 195.0e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[qubit 8]
g_factor = 2.000000
rabi_hz = 204.5e3
t2_star_s = 41e-6
t2_hahn_s = 1.31e-3

[exchange]
j0_hz = 250e3
v0_volts = 1.500
slope_dec_per_v = 33.69
eps_scale_v = 0.050
j_max_hz = 100e6

[noise]
backend = stochastic
derive_sigma_from_t2 = true
ou_sigma_hz = 1191.54
ou_tau_s = 0.01
envelope_exponent_ramsey = 2
envelope_exponent_hahn = 2

[sensor]
mu_blocked = 0.0
mu_unblocked = 1.0
mu_blocked_central = 0.0
mu_unblocked_central = 0.30
cascade_gain = 3.3
sigma_signal = 0.12
integration_shots = 1

[cascade]
eps_anticrossing_v = 0.010
window_halfwidth_v = 0.004

[sensor_proxy]
decay = 0.55
background_per_volt = 0.02

[initialization]
herald_probability = 0.5
retry_limit = 20

[loading]
targets = 12 6 10 4
flood_plunger_v = 2.40
flood_barrier_v = 1.80
reduce_barrier_v = 0.90
block_barrier_v = -0.60
pushout_sensor_v = 0.20

[loading p1p2]
gate = P2
level = 1.60 0
level = 1.64 2
level = 1.68 4
level = 1.72 6
level = 1.76 8
level = 1.80 10
level = 1.84 12
level = 1.88 14

[loading p3p4]
gate = P4
level = 1.60 0
level = 1.66 2
level = 1.72 4
level = 1.78 6
level = 1.84 8

[loading p5p6]
gate = P5
level = 1.60 0
level = 1.64 2
level = 1.68 4
level = 1.72 6
level = 1.76 8
level = 1.80 10
level = 1.84 12

[loading p7p8]
gate = P7
level = 1.60 0
level = 1.67 2
level = 1.74 4
level = 1.81 6

# Charge-instability region the electrostatic model does not reproduce
# (diagonal transition above 150 mV detuning).
[exclusion instability-150mv]
x_axis = vj
y_axis = eps
x_range = 1.40 1.60
y_range = 0.150 0.200

[map stability-p1p2]
pair = 1
x = P1 1.740 1.860 49
y = P2 1.740 1.860 49
total = 12

[map stability-p7p8]
pair = 4
x = P7 1.740 1.860 49
y = P8 1.740 1.860 49
total = 4

[experiment chevron-q1]
kind = chevron
qubit = 1
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q2]
kind = chevron
qubit = 2
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q3]
kind = chevron
qubit = 3
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q4]
kind = chevron
qubit = 4
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q5]
kind = chevron
qubit = 5
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q6]
kind = chevron
qubit = 6
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q7]
kind = chevron
qubit = 7
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment chevron-q8]
kind = chevron
qubit = 8
offset_hz = -1.2e6 1.2e6 41
duration_s = 0 24e-6 41
shots = 200

[experiment ramsey-q1]
kind = ramsey_purity
qubit = 1
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q2]
kind = ramsey_purity
qubit = 2
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q3]
kind = ramsey_purity
qubit = 3
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q4]
kind = ramsey_purity
qubit = 4
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q5]
kind = ramsey_purity
qubit = 5
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q6]
kind = ramsey_purity
qubit = 6
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q7]
kind = ramsey_purity
qubit = 7
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment ramsey-q8]
kind = ramsey_purity
qubit = 8
delay_s = 0.5e-6 100e-6 30
shots = 200

[experiment hahn-q1]
kind = hahn
qubit = 1
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q2]
kind = hahn
qubit = 2
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q3]
kind = hahn
qubit = 3
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q4]
kind = hahn
qubit = 4
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q5]
kind = hahn
qubit = 5
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q6]
kind = hahn
qubit = 6
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q7]
kind = hahn
qubit = 7
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment hahn-q8]
kind = hahn
qubit = 8
total_delay_s = 1e-5 3.0e-3 24
shots = 200

[experiment fingerprint]
kind = fingerprint
pair = 1
vj_volts = 1.46 1.56 41
eps_volts = -0.05 0.20 41
wait_s = 1e-6
shots = 100
backend = analytic

[experiment exchange-turnon]
kind = exchange_spectroscopy
pair = 1
vj_volts = 1.49 1.53 17
wait_s = 0 16e-6 256
shots = 100
backend = analytic

[experiment cz-cal]
kind = cz_calibration
pair = 1
vj_volts = 1.500
correction_rad = 0 6.283185307179586 121
repetitions = 38
shots = 200
backend = analytic

[experiment cascade-cal]
kind = cascade_calibration
pair = 2
eps_lateral_v = -0.005 0.025 31
shots = 400

[experiment feedback-demo]
kind = feedback_demo
qubit = 1
cycles = 400
larmor_step_hz = 1500
set_step_v = 4e-4
probe_delay_s = 2.5e-6
probe_shots = 50
gain = 1.0
)CFG";
    return text;
}

} // namespace spinline
