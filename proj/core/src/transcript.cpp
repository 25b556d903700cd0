#include "onionnet/transcript.hpp"

#include <sstream>

namespace onionnet {

std::string Transcript::trace_line(const overlay::DeliveryTrace& trace) {
    std::ostringstream out;
    out << "trace";
    for (const auto& obs : trace.relays) {
        out << " relay#" << obs.relay.value << "=[";
        for (std::size_t i = 0; i < obs.observed.size(); ++i) {
            if (i) out << ",";
            out << "node#" << obs.observed[i].value;
        }
        out << "]";
    }
    out << (trace.delivered ? " delivered" : " dropped");
    if (trace.dropped_at) out << " at=relay#" << trace.dropped_at->value;
    out << " latency=" << trace.latency;
    if (trace.degenerate_single_hop) out << " degenerate";
    out << "\n";
    return out.str();
}

std::string Transcript::serialize() const {
    std::ostringstream out;
    for (const auto& tr : transitions) {
        out << "transition t=" << tr.time << " bot=" << (tr.onion.empty() ? "-" : tr.onion) << " "
            << tr.from << "->" << tr.to << "\n";
    }
    for (const auto& d : deliveries) {
        out << "delivery t=" << d.time << " cmd=" << d.command << " bot=" << d.onion << "\n";
    }
    for (const auto& f : forwards) {
        out << "forward t=" << f.time << " cmd=" << f.command << " bot=" << f.onion
            << " fanout=" << f.fanout << "\n";
    }
    for (const auto& e : executions) {
        out << "execute t=" << e.time << " cmd=" << e.command << " bot=" << e.onion << "\n";
    }
    for (const auto& a : absorbed) {
        out << "absorbed t=" << a.time << " cmd=" << a.command << " by=" << a.onion << "\n";
    }
    for (const auto& trace : traces) {
        out << trace_line(trace);
    }
    for (const auto& line : wire_lines) {
        out << line;
        if (line.empty() || line.back() != '\n') out << "\n";
    }
    return out.str();
}

}  // namespace onionnet
