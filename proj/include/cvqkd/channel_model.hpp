#pragma once

// Scalar channel arithmetic for the four-state protocol over a lossy, noisy
// bosonic line: parameter composition, cloner variances, homodyne outcome
// statistics, bit error rate, and mutual information.
//
// Conventions: transmissions are linear power ratios; excess noise xi is
// quoted in shot-noise units such that the homodyne outcome variance for a
// transmitted coherent state is (1 + xi)/4.

namespace cvqkd {

struct ChannelParams {
    double eta = 1.0;  // transmission, in (0, 1]
    double xi = 0.0;   // excess noise >= 0
};

// Two channels in series: transmissions multiply, the first stage's excess
// noise is attenuated by the second stage before the second adds its own.
ChannelParams compose(const ChannelParams& first, const ChannelParams& second);

// Variance of the two-mode squeezed state an eavesdropper injects through a
// beamsplitter of transmission eta to emulate the channel (eta, xi).
// Requires eta < 1 (a lossless channel leaves no beamsplitter port; callers
// must take the limit explicitly).  Satisfies (V + 1/V)/2 = (1-eta+xi)/(1-eta).
double cloner_variance(double eta, double xi);

// The full link: an attacker-controlled channel (eta1, xi1) followed by a
// detection stage (eta2, xi2) inside the receiver that the attacker cannot
// purify.
struct LinkModel {
    ChannelParams channel;   // eta1, xi1
    ChannelParams detector;  // eta2, xi2
    double v1 = 1.0;         // cloner variance of the channel stage
    double v2 = 1.0;         // cloner variance of the detector stage; +inf
                             // when eta2 == 1 with xi2 > 0 (noise without loss)

    // Validates ranges (eta1 strictly below 1) and fills in the variances.
    static LinkModel make(const ChannelParams& channel, const ChannelParams& detector);
};

// Composite (eta, xi) seen end to end: (eta1*eta2, xi1*eta2 + xi2).
ChannelParams compose_channels(const LinkModel& link);

// Signal-side knobs: coherent amplitude and reconciliation efficiency.
struct ProtocolSignal {
    double alpha = 0.7071067811865476;  // amplitude > 0; alpha^2 = mean photon number
    double f = 1.0;                     // error-correction efficiency >= 1
};

// Probability density of the receiver's quadrature outcome m when the sent
// displacement along the measured quadrature is S (S = +/-alpha for the two
// key states): sqrt(2/(pi(1+xi))) exp(-2(m - sqrt(eta) S)^2 / (1+xi)).
double quadrature_pdf(double m, double s, const ChannelParams& total);

// Error probability of the sign bit given outcome magnitude |m|:
// [1 + exp(8 sqrt(eta) |m| alpha / (1+xi))]^-1, in (0, 1/2].
double bit_error_rate(double m_abs, double alpha, const ChannelParams& total);

// Binary Shannon entropy in bits; h(0) = h(1) = 0.
double binary_entropy(double p);

// Bits shared per kept outcome after error correction with efficiency f:
// 1 - f h(eps).  May be negative for f > 1.
double mutual_information(double eps, double f);

// Fibre attenuation: distance in km at loss_db_per_km dB/km to a linear
// transmission 10^(-loss*d/10).  d = 0 gives exactly 1, which LinkModel
// rejects; clamp before constructing a link.
double distance_to_transmission(double d_km, double loss_db_per_km);
double transmission_to_distance(double eta, double loss_db_per_km);

}  // namespace cvqkd
