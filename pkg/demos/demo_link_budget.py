"""Link-budget walk: pathloss, SNR, and capacity at 28 GHz over 500 MHz.

Tabulates the street-canyon budget for vehicle-to-vehicle and
vehicle-to-base-station hops, and shows what a body blockage (flat 20 dB)
or a building corner (NLoS formula) costs in capacity.
"""

from fogfleet import RadioParams, ScenarioConfig, capacity_bps, pathloss_umi, snr_db
from fogfleet.channel import breakpoint_distance

cfg = ScenarioConfig()
params = RadioParams.from_config(cfg)
mount = cfg.antenna_mount_height_m

print(f"carrier {cfg.carrier_hz / 1e9:.0f} GHz, fog slice {cfg.bandwidth_hz / 1e6:.0f} MHz, "
      f"vehicle tx {cfg.vehicle_tx_power_dbm:.0f} dBm, noise figure {cfg.noise_figure_db:.0f} dB")
print(f"V2V breakpoint distance: {float(breakpoint_distance(mount, mount, cfg.carrier_hz)):.1f} m")
print()

header = f"{'d [m]':>6} | {'PL LoS':>8} {'PL NLoS':>8} | {'SNR':>7} {'SNR blk':>8} | " \
         f"{'cap [Gbps]':>10} {'cap blk':>8}"
print("vehicle-to-vehicle hops (both ends at the 1.4 m roofline)")
print(header)
print("-" * len(header))
for d in (10, 20, 40, 80, 120, 160, 200):
    pl = float(pathloss_umi(d, mount, mount, cfg.carrier_hz))
    pl_n = float(pathloss_umi(d, mount, mount, cfg.carrier_hz, building_blocked=True))
    s = snr_db(cfg.vehicle_tx_power_dbm, cfg.vehicle_antenna_gain_dbi,
               cfg.vehicle_antenna_gain_dbi, pl, cfg.bandwidth_hz, cfg.noise_figure_db)
    s_blk = s - cfg.vehicle_blockage_penalty_db
    print(f"{d:6d} | {pl:8.2f} {pl_n:8.2f} | {s:7.2f} {s_blk:8.2f} | "
          f"{capacity_bps(s, cfg.bandwidth_hz) / 1e9:10.2f} "
          f"{capacity_bps(s_blk, cfg.bandwidth_hz) / 1e9:8.2f}")

print()
print("uplink to a base station sector (10 m mast)")
print(header)
print("-" * len(header))
for d in (20, 50, 100, 150, 200):
    pl = float(pathloss_umi(d, cfg.bs_height_m, mount, cfg.carrier_hz))
    pl_n = float(pathloss_umi(d, cfg.bs_height_m, mount, cfg.carrier_hz, building_blocked=True))
    s = snr_db(cfg.vehicle_tx_power_dbm, cfg.vehicle_antenna_gain_dbi,
               cfg.bs_antenna_gain_dbi, pl, cfg.bandwidth_hz, cfg.noise_figure_db)
    s_n = snr_db(cfg.vehicle_tx_power_dbm, cfg.vehicle_antenna_gain_dbi,
                 cfg.bs_antenna_gain_dbi, pl_n, cfg.bandwidth_hz, cfg.noise_figure_db)
    print(f"{d:6d} | {pl:8.2f} {pl_n:8.2f} | {s:7.2f} {s_n:8.2f} | "
          f"{capacity_bps(s, cfg.bandwidth_hz) / 1e9:10.2f} "
          f"{capacity_bps(s_n, cfg.bandwidth_hz) / 1e9:8.2f}")

print()
print("narrowing the allocation raises SNR but costs capacity:")
for share in (1, 2, 4, 10):
    bw = cfg.bandwidth_hz / share
    pl = float(pathloss_umi(60.0, mount, mount, cfg.carrier_hz))
    s = snr_db(cfg.vehicle_tx_power_dbm, 5.0, 5.0, pl, bw, cfg.noise_figure_db)
    print(f"  1/{share:<2d} of the slice ({bw / 1e6:5.0f} MHz): "
          f"SNR {s:6.2f} dB, capacity {capacity_bps(s, bw) / 1e9:5.2f} Gbps")
