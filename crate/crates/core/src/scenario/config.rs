use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Large-scale propagation parameters.
///
/// Path loss in dB is `reference_loss_db + 10 · path_loss_exponent · log10(d)`
/// with `d` the 3-D distance in meters between a user at ground level and an
/// AP mounted at `ap_height`. Log-normal shadowing is drawn once per
/// user/AP pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub path_loss_exponent: f64,
    pub reference_loss_db: f64,
    pub shadowing_std_db: f64,
    pub noise_power_dbm: f64,
    pub ap_height: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.67,
            reference_loss_db: 30.5,
            shadowing_std_db: 4.0,
            noise_power_dbm: -94.0,
            ap_height: 10.0,
        }
    }
}

impl ChannelParams {
    /// Average channel gain normalized by the noise power at 3-D distance `d`
    /// before shadowing.
    pub fn normalized_gain(&self, d: f64) -> f64 {
        let loss_db = self.reference_loss_db + 10.0 * self.path_loss_exponent * d.log10();
        let noise_dbw = self.noise_power_dbm - 30.0;
        10f64.powf((-loss_db - noise_dbw) / 10.0)
    }
}

/// Cell-less uplink network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_users: usize,
    /// Number of strongest APs serving each user.
    pub aps_per_user: usize,
    pub num_realizations: usize,
    /// Per-user power limit, watts.
    pub p_max: f64,
    pub seed: u64,
    pub channel_params: ChannelParams,
    /// Variance of the channel estimation error relative to the large-scale
    /// gain. Zero means the combiners see the true channels.
    pub estimation_noise_fraction: f64,
    /// Keep every channel and beamformer realization in the output.
    pub store_channels: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side: 100.0,
            num_aps: 4,
            antennas_per_ap: 2,
            num_users: 3,
            aps_per_user: 2,
            num_realizations: 100,
            p_max: 0.2,
            seed: 0,
            channel_params: ChannelParams::default(),
            estimation_noise_fraction: 0.0,
            store_channels: false,
        }
    }
}

impl ScenarioConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_aps", self.num_aps),
            ("antennas_per_ap", self.antennas_per_ap),
            ("num_users", self.num_users),
            ("aps_per_user", self.aps_per_user),
            ("num_realizations", self.num_realizations),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        if self.aps_per_user > self.num_aps {
            return invalid(format!(
                "aps_per_user ({}) exceeds num_aps ({})",
                self.aps_per_user, self.num_aps
            ));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return invalid("p_max must be positive and finite");
        }
        if !(self.area_side > 0.0) || !self.area_side.is_finite() {
            return invalid("area_side must be positive and finite");
        }
        if !(self.estimation_noise_fraction >= 0.0) || !self.estimation_noise_fraction.is_finite() {
            return invalid("estimation_noise_fraction must be nonnegative and finite");
        }
        let c = &self.channel_params;
        if !(c.shadowing_std_db >= 0.0) || !c.shadowing_std_db.is_finite() {
            return invalid("shadowing_std_db must be nonnegative and finite");
        }
        if !(c.ap_height >= 0.0) || !c.ap_height.is_finite() {
            return invalid("ap_height must be nonnegative and finite");
        }
        if !c.path_loss_exponent.is_finite()
            || !c.reference_loss_db.is_finite()
            || !c.noise_power_dbm.is_finite()
        {
            return invalid("channel parameters must be finite");
        }
        Ok(())
    }
}
