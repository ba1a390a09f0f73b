//! Two-period time-of-use tariff and the derived arbitrage quantities.

use crate::error::{Error, Result};
use crate::units::{Frac, Price};

/// Tariff parameters: peak and off-peak energy prices plus amortized
/// daily capital costs of storage (per consumer, and the shared figure
/// used for jointly procured capacity).
///
/// Invariants enforced at construction: `peak > offpeak > 0`, every
/// capital cost is nonnegative, and no capital cost exceeds the arbitrage
/// price `peak − offpeak` (otherwise storage can never pay for itself).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tariff {
    peak: Price,
    offpeak: Price,
    shared_capital: Price,
    per_consumer_capital: Vec<Price>,
}

impl Tariff {
    pub fn new(
        peak: Price,
        offpeak: Price,
        shared_capital: Price,
        per_consumer_capital: Vec<Price>,
    ) -> Result<Tariff> {
        if peak <= offpeak || offpeak <= Price::ZERO {
            return Err(Error::PriceOrdering {
                peak: peak.to_string(),
                offpeak: offpeak.to_string(),
            });
        }
        let delta = peak - offpeak;
        for &capital in per_consumer_capital.iter().chain([&shared_capital]) {
            if capital.is_negative() {
                return Err(Error::NegativeCapitalCost(capital.to_string()));
            }
            if capital > delta {
                return Err(Error::Viability {
                    capital: capital.to_string(),
                    arbitrage: delta.to_string(),
                });
            }
        }
        Ok(Tariff {
            peak,
            offpeak,
            shared_capital,
            per_consumer_capital,
        })
    }

    /// Every consumer pays the shared capital cost, the default when
    /// devices are bought jointly (same technology, same time).
    pub fn with_uniform_capital(
        peak: Price,
        offpeak: Price,
        shared_capital: Price,
        consumers: usize,
    ) -> Result<Tariff> {
        Tariff::new(peak, offpeak, shared_capital, vec![shared_capital; consumers])
    }

    pub fn peak_price(&self) -> Price {
        self.peak
    }

    pub fn offpeak_price(&self) -> Price {
        self.offpeak
    }

    pub fn shared_capital(&self) -> Price {
        self.shared_capital
    }

    pub fn capital_of(&self, consumer: usize) -> Result<Price> {
        self.per_consumer_capital
            .get(consumer)
            .copied()
            .ok_or(Error::UnknownConsumer {
                index: consumer,
                n: self.per_consumer_capital.len(),
            })
    }

    pub fn consumer_count(&self) -> usize {
        self.per_consumer_capital.len()
    }

    /// The arbitrage price: peak minus off-peak, the gross per-kWh margin
    /// of shifting consumption. Strictly positive.
    pub fn arbitrage_price(&self) -> Price {
        self.peak - self.offpeak
    }

    /// The arbitrage constant γ = (π_δ − capital)/π_δ for a given daily
    /// capital cost. Lies in [0,1]; it is the critical fractile at which
    /// storage capacity is sized.
    pub fn arbitrage_constant(&self, capital_cost: Price) -> Result<Frac> {
        if capital_cost.is_negative() {
            return Err(Error::NegativeCapitalCost(capital_cost.to_string()));
        }
        let delta = self.arbitrage_price();
        if capital_cost > delta {
            return Err(Error::Viability {
                capital: capital_cost.to_string(),
                arbitrage: delta.to_string(),
            });
        }
        Ok(Frac::new(
            (delta.raw() - capital_cost.raw()) as i128,
            delta.raw() as i128,
        ))
    }

    /// γ for the shared capital cost; infallible because viability was
    /// checked at construction.
    pub fn gamma_shared(&self) -> Frac {
        self.arbitrage_constant(self.shared_capital)
            .expect("shared capital validated at construction")
    }

    pub fn gamma_of(&self, consumer: usize) -> Result<Frac> {
        self.arbitrage_constant(self.capital_of(consumer)?)
    }
}

/// The case-study tariff: 55 c/kWh peak, 20 c/kWh off-peak, 15 c/kWh/day
/// shared capital cost.
pub fn default_tariff(consumers: usize) -> Tariff {
    Tariff::with_uniform_capital(
        Price::from_cents(55.0),
        Price::from_cents(20.0),
        Price::from_cents(15.0),
        consumers,
    )
    .expect("default tariff is viable")
}
