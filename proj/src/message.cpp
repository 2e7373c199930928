#include "hlb/message.hpp"

#include <array>
#include <sstream>

namespace hlb {

namespace {

constexpr std::array<std::string_view, kMessageVariants> kNames = {
  "Poll",  "NodeState", "XferCmd", "NodeLoad",   "CoordLoad", "XLoad",
  "NodeAck", "XAck",    "Token",   "LoadVector", "End",
};

std::string tag_str(TransferTag const& t) {
  return std::to_string(t.issuer) + ":" + std::to_string(t.seq);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string entries_str(std::vector<TokenEntry> const& entries) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) {
      os << ',';
    }
    os << entries[i].cluster << '=' << entries[i].total;
  }
  os << ']';
  return os.str();
}

} // namespace

std::string to_string(ActorId const& a) {
  return (a.role == Role::Coordinator ? "C" : "N") + std::to_string(a.node);
}

std::string_view variant_name(std::size_t index) {
  return index < kNames.size() ? kNames[index] : std::string_view{"?"};
}

std::string_view variant_name(Message const& m) { return variant_name(m.index()); }

std::string payload_summary(Message const& m) {
  return std::visit(
    overloaded{
      [](Poll const&) { return std::string{}; },
      [](NodeStateReport const& s) { return "load=" + std::to_string(s.load); },
      [](XferCmd const& x) {
        return std::string(x.remote ? "cluster=" : "node=") + std::to_string(x.dest) +
               " amount=" + std::to_string(x.amount) + " tag=" + tag_str(x.tag);
      },
      [](NodeLoad const& l) {
        return "amount=" + std::to_string(l.amount) + " tag=" + tag_str(l.tag);
      },
      [](CoordLoad const& l) {
        return "amount=" + std::to_string(l.amount) + " to=" + std::to_string(l.dest_cluster) +
               " tag=" + tag_str(l.tag);
      },
      [](XLoad const& l) {
        return "amount=" + std::to_string(l.amount) + " from=" +
               std::to_string(l.sender_cluster) + " tag=" + tag_str(l.tag);
      },
      [](NodeAck const& a) { return "tag=" + tag_str(a.tag); },
      [](XAck const& a) { return "tag=" + tag_str(a.tag); },
      [](Token const& t) {
        return "orig=" + std::to_string(t.originator) + " " + entries_str(t.entries);
      },
      [](LoadVector const& v) { return entries_str(v.entries); },
      [](End const&) { return std::string{}; },
    },
    m
  );
}

bool is_load_bearing(Message const& m) {
  return std::holds_alternative<NodeLoad>(m) || std::holds_alternative<CoordLoad>(m) ||
         std::holds_alternative<XLoad>(m);
}

} // namespace hlb
