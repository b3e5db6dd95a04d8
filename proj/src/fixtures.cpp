#include "eccnet/fixtures.hpp"

namespace eccnet {

std::vector<RfTableMismatch> rf_table_mismatches(const BackboneConfig& config) {
    std::vector<RfTableMismatch> out;
    for (const auto& row : kRfTable) {
        const EccPoolConfig cfg = config.pool_config(row.layer_id);
        for (std::size_t i = 0; i < row.distance.size(); ++i) {
            const int got = ecc_rf_size(cfg, row.distance[i]);
            if (got != row.window[i])
                out.push_back({row.layer_id, row.distance[i], row.window[i], got});
        }
    }
    return out;
}

} // namespace eccnet
