use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// How long a policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// One menu table per step `t = 0..T`.
    Finite(usize),
    /// A single menu table used at every step.
    Stationary,
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_u64(*t as u64),
            Horizon::Stationary => s.serialize_str("stationary"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Steps(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Steps(t) => Ok(Horizon::Finite(t)),
            Raw::Name(n) if n == "stationary" => Ok(Horizon::Stationary),
            Raw::Name(n) => Err(serde::de::Error::custom(format!(
                "horizon must be a step count or \"stationary\", got {n:?}"
            ))),
        }
    }
}

/// A price, serialized as a number or the string `"inf"` for "not offered".
#[derive(Debug, Clone, Copy, PartialEq)]
struct Price(f64);

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Price(x)),
            Raw::Text(t) if t == "inf" => Ok(Price(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "price must be a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Posted-price menus indexed by `(t, s, length)`.
///
/// `f64::INFINITY` means the length is not offered.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingPolicy {
    horizon: Horizon,
    discount: f64,
    lengths: Vec<u32>,
    num_states: usize,
    price_set: Vec<f64>,
    /// Dense `[t][s][length]`.
    prices: Vec<f64>,
}

fn in_price_set(price_set: &[f64], p: f64) -> bool {
    p.is_infinite() && p > 0.0
        || price_set
            .iter()
            .any(|&x| (x - p).abs() <= 1e-12 * x.abs().max(1.0))
}

impl PricingPolicy {
    /// Checks the table shape and that every finite price is in `price_set`.
    pub fn new(
        horizon: Horizon,
        discount: f64,
        lengths: Vec<u32>,
        num_states: usize,
        price_set: Vec<f64>,
        prices: Vec<f64>,
    ) -> Result<Self> {
        let layers = match horizon {
            Horizon::Finite(0) => {
                return Err(Error::PolicyShape("finite horizon must be at least 1".into()))
            }
            Horizon::Finite(t) => t,
            Horizon::Stationary => 1,
        };
        if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PolicyShape(
                "lengths must be non-empty and strictly increasing".into(),
            ));
        }
        if num_states == 0 {
            return Err(Error::PolicyShape("need at least one state".into()));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount {discount} outside (0, 1]"
            )));
        }
        let expected = layers * num_states * lengths.len();
        if prices.len() != expected {
            return Err(Error::PolicyShape(format!(
                "expected {expected} prices ({layers} x {num_states} x {}), got {}",
                lengths.len(),
                prices.len()
            )));
        }
        if let Some(p) = prices.iter().find(|&&p| !in_price_set(&price_set, p)) {
            return Err(Error::PolicyShape(format!("price {p} is not in the price set")));
        }
        Ok(PricingPolicy {
            horizon,
            discount,
            lengths,
            num_states,
            price_set,
            prices,
        })
    }

    /// The same menu at every step and state.
    pub fn constant(
        horizon: Horizon,
        discount: f64,
        lengths: Vec<u32>,
        num_states: usize,
        menu: &[f64],
    ) -> Result<Self> {
        if menu.len() != lengths.len() {
            return Err(Error::PolicyShape(format!(
                "menu has {} prices for {} lengths",
                menu.len(),
                lengths.len()
            )));
        }
        let layers = match horizon {
            Horizon::Finite(t) => t,
            Horizon::Stationary => 1,
        };
        let prices = menu
            .iter()
            .copied()
            .cycle()
            .take(layers * num_states * menu.len())
            .collect();
        let mut price_set: Vec<f64> = menu.iter().copied().filter(|p| p.is_finite()).collect();
        price_set.sort_by(f64::total_cmp);
        price_set.dedup();
        Self::new(horizon, discount, lengths, num_states, price_set, prices)
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn price_set(&self) -> &[f64] {
        &self.price_set
    }

    /// Number of stored menu layers: `T`, or 1 for a stationary policy.
    pub fn layers(&self) -> usize {
        match self.horizon {
            Horizon::Finite(t) => t,
            Horizon::Stationary => 1,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.horizon == Horizon::Stationary
    }

    /// Whether the policy defines menus for steps `0..steps`.
    pub fn covers(&self, steps: usize) -> bool {
        match self.horizon {
            Horizon::Finite(t) => steps <= t,
            Horizon::Stationary => true,
        }
    }

    fn layer(&self, t: usize) -> usize {
        match self.horizon {
            Horizon::Finite(_) => t,
            Horizon::Stationary => 0,
        }
    }

    /// Menu posted at step `t` in state `s`, one price per length. States
    /// beyond the table reuse the last row.
    pub fn menu(&self, t: usize, s: u32) -> &[f64] {
        let nl = self.lengths.len();
        let s = (s as usize).min(self.num_states - 1);
        let start = (self.layer(t) * self.num_states + s) * nl;
        &self.prices[start..start + nl]
    }

    pub fn price(&self, t: usize, s: u32, length_idx: usize) -> f64 {
        self.menu(t, s)[length_idx]
    }

    /// The dense `[t][s][length]` price array.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Reads the policy back from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolicyFile =
            serde_json::from_str(text).map_err(|e| Error::PolicyShape(e.to_string()))?;
        file.into_policy()
    }

    pub fn to_file(&self) -> PolicyFile {
        PolicyFile {
            horizon: self.horizon,
            discount: self.discount,
            states: self.num_states,
            lengths: self.lengths.clone(),
            price_set: self.price_set.clone(),
            prices: self.prices.iter().map(|&p| Price(p)).collect(),
        }
    }
}

/// On-disk form of a [`PricingPolicy`]. Prices are listed densely in
/// `[t][s][length]` order with `"inf"` for lengths that are not offered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub horizon: Horizon,
    pub discount: f64,
    pub states: usize,
    pub lengths: Vec<u32>,
    pub price_set: Vec<f64>,
    prices: Vec<Price>,
}

impl PolicyFile {
    pub fn into_policy(self) -> Result<PricingPolicy> {
        PricingPolicy::new(
            self.horizon,
            self.discount,
            self.lengths,
            self.states,
            self.price_set,
            self.prices.into_iter().map(|p| p.0).collect(),
        )
    }
}

/// Result of [`check_monotone`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// `(t, s, l)` where the price of `l` exceeds that of the next length.
    pub violations: Vec<(usize, u32, u32)>,
}

/// Scans every menu for a length priced above the next longer one.
/// `+inf` compares above every finite price.
pub fn check_monotone(policy: &PricingPolicy) -> MonotoneReport {
    let mut violations = Vec::new();
    for t in 0..policy.layers() {
        for s in 0..policy.num_states as u32 {
            let menu = policy.menu(t, s);
            for (i, w) in menu.windows(2).enumerate() {
                if w[0] > w[1] {
                    violations.push((t, s, policy.lengths[i]));
                }
            }
        }
    }
    MonotoneReport {
        monotone: violations.is_empty(),
        violations,
    }
}

/// Replaces each menu by its running maximum over lengths.
pub fn project_monotone(policy: &PricingPolicy) -> PricingPolicy {
    let mut out = policy.clone();
    for menu in out.prices.chunks_mut(policy.lengths.len()) {
        for i in 1..menu.len() {
            menu[i] = menu[i].max(menu[i - 1]);
        }
    }
    out
}

/// Index and price of the cheapest offer among `menu[from..]`, ties going
/// to the shorter length. `None` when nothing there is offered.
pub fn cheapest_offer(menu: &[f64], from: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in menu.iter().enumerate().skip(from) {
        if p.is_finite() && best.is_none_or(|(_, b)| p < b) {
            best = Some((i, p));
        }
    }
    best
}

/// Expected-future-revenue tables: `U[t][s]` for `t = 0..=T` and
/// `W[t][s][length]` for `t = 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    horizon: usize,
    num_states: usize,
    num_lengths: usize,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl ValueTables {
    pub(crate) fn zeros(horizon: usize, num_states: usize, num_lengths: usize) -> Self {
        ValueTables {
            horizon,
            num_states,
            num_lengths,
            u: vec![0.0; (horizon + 1) * num_states],
            w: vec![0.0; horizon * num_states * num_lengths],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_lengths(&self) -> usize {
        self.num_lengths
    }

    pub fn u(&self, t: usize, s: usize) -> f64 {
        self.u[t * self.num_states + s]
    }

    pub fn w(&self, t: usize, s: usize, length_idx: usize) -> f64 {
        self.w[(t * self.num_states + s) * self.num_lengths + length_idx]
    }

    /// Row `U[t][·]`.
    pub fn u_row(&self, t: usize) -> &[f64] {
        &self.u[t * self.num_states..(t + 1) * self.num_states]
    }

    pub(crate) fn u_row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.u[t * self.num_states..(t + 1) * self.num_states]
    }

    pub(crate) fn set_w(&mut self, t: usize, s: usize, length_idx: usize, value: f64) {
        self.w[(t * self.num_states + s) * self.num_lengths + length_idx] = value;
    }

    /// `U` as CSV rows `t,s,U`.
    pub fn u_csv(&self) -> String {
        let mut out = String::from("t,s,U\n");
        for t in 0..=self.horizon {
            for s in 0..self.num_states {
                out.push_str(&format!("{t},{s},{}\n", self.u(t, s)));
            }
        }
        out
    }

    /// `W` as CSV rows `t,s,l,W`.
    pub fn w_csv(&self, lengths: &[u32]) -> String {
        let mut out = String::from("t,s,l,W\n");
        for t in 0..self.horizon {
            for s in 0..self.num_states {
                for (li, l) in lengths.iter().enumerate() {
                    out.push_str(&format!("{t},{s},{l},{}\n", self.w(t, s, li)));
                }
            }
        }
        out
    }
}
