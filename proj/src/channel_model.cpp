#include "cvqkd/channel_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cvqkd {

namespace {

void check_channel(const ChannelParams& c, const char* what) {
    if (!(c.eta > 0.0) || c.eta > 1.0)
        throw std::invalid_argument(std::string(what) + ": transmission must be in (0, 1]");
    if (!(c.xi >= 0.0))
        throw std::invalid_argument(std::string(what) + ": excess noise must be >= 0");
}

}  // namespace

ChannelParams compose(const ChannelParams& first, const ChannelParams& second) {
    check_channel(first, "compose: first stage");
    check_channel(second, "compose: second stage");
    return {first.eta * second.eta, first.xi * second.eta + second.xi};
}

double cloner_variance(double eta, double xi) {
    if (!(eta > 0.0) || eta >= 1.0)
        throw std::invalid_argument(
            "cloner_variance: transmission must be in (0, 1); the lossless case "
            "has no beamsplitter port and must be handled as a limit by the caller");
    if (!(xi >= 0.0))
        throw std::invalid_argument("cloner_variance: excess noise must be >= 0");
    const double w = (1.0 - eta + xi) / (1.0 - eta);
    // Larger root of V + 1/V = 2w; the (w-1)(w+1) form avoids cancellation
    // near w = 1.
    return w + std::sqrt((w - 1.0) * (w + 1.0));
}

LinkModel LinkModel::make(const ChannelParams& channel, const ChannelParams& detector) {
    check_channel(channel, "LinkModel: channel");
    check_channel(detector, "LinkModel: detector");
    if (channel.eta >= 1.0)
        throw std::invalid_argument(
            "LinkModel: channel transmission must be strictly below 1 "
            "(clamp lossless inputs, e.g. to 1 - 1e-9, before building the link)");
    LinkModel lk;
    lk.channel = channel;
    lk.detector = detector;
    lk.v1 = cloner_variance(channel.eta, channel.xi);
    if (detector.eta < 1.0)
        lk.v2 = cloner_variance(detector.eta, detector.xi);
    else
        lk.v2 = detector.xi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return lk;
}

ChannelParams compose_channels(const LinkModel& link) {
    return compose(link.channel, link.detector);
}

double quadrature_pdf(double m, double s, const ChannelParams& total) {
    check_channel(total, "quadrature_pdf");
    const double d = m - std::sqrt(total.eta) * s;
    return std::sqrt(2.0 / (M_PI * (1.0 + total.xi))) *
           std::exp(-2.0 * d * d / (1.0 + total.xi));
}

double bit_error_rate(double m_abs, double alpha, const ChannelParams& total) {
    if (!(m_abs >= 0.0))
        throw std::invalid_argument("bit_error_rate: |m| must be >= 0");
    if (!(alpha > 0.0))
        throw std::invalid_argument("bit_error_rate: alpha must be > 0");
    check_channel(total, "bit_error_rate");
    const double t = 8.0 * std::sqrt(total.eta) * m_abs * alpha / (1.0 + total.xi);
    // 1/(1 + e^t) with t >= 0; the exp(-t) form stays finite for large t.
    const double e = std::exp(-t);
    return e / (1.0 + e);
}

double binary_entropy(double p) {
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::domain_error("binary_entropy: argument must be in [0, 1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double mutual_information(double eps, double f) {
    if (!(f >= 1.0))
        throw std::invalid_argument("mutual_information: f must be >= 1");
    return 1.0 - f * binary_entropy(eps);
}

double distance_to_transmission(double d_km, double loss_db_per_km) {
    if (!(d_km >= 0.0))
        throw std::invalid_argument("distance_to_transmission: distance must be >= 0");
    if (!(loss_db_per_km > 0.0))
        throw std::invalid_argument("distance_to_transmission: loss must be > 0");
    return std::pow(10.0, -0.1 * loss_db_per_km * d_km);
}

double transmission_to_distance(double eta, double loss_db_per_km) {
    if (!(eta > 0.0) || eta > 1.0)
        throw std::invalid_argument("transmission_to_distance: eta must be in (0, 1]");
    if (!(loss_db_per_km > 0.0))
        throw std::invalid_argument("transmission_to_distance: loss must be > 0");
    return -10.0 * std::log10(eta) / loss_db_per_km;
}

}  // namespace cvqkd
