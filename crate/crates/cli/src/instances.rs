//! Seeded random instances for the property checks and acceptance runs.

use rand::Rng;
use spectrum_auction::num::ratio;
use spectrum_auction::{Bid, BidderKind, ExtendedBid, SlotConfig};

use crate::formats::default_rate_table;

fn kind<R: Rng>(rng: &mut R) -> BidderKind {
    if rng.random_bool(0.3) {
        BidderKind::RelayNode
    } else {
        BidderKind::DirectUe
    }
}

/// Basic-model instance: 3 to 12 bids on 12 to 30 RBs, demands in
/// `[1, N/2 - 1]`, values on a 1/100 grid up to 100, about 30 % relays.
pub fn random_basic_instance<R: Rng>(rng: &mut R) -> (SlotConfig, Vec<Bid>) {
    let n = rng.random_range(12..=30usize);
    let count = rng.random_range(3..=12u32);
    let bids = (1..=count)
        .map(|id| {
            let demand = rng.random_range(1..=n / 2 - 1);
            let value = ratio(rng.random_range(1..=10_000), 100);
            Bid::new(id, kind(rng), demand, value)
        })
        .collect();
    let config = SlotConfig::new(n, 1, default_rate_table()).expect("valid grid");
    (config, bids)
}

/// Extended-model instance within the exact solver's budget: 3 to 10 bids
/// on 16, 24 or 32 RBs in sub-bands of 2 or 4, demands in `[1, N/2 - 1]`,
/// unit prices in `[0.5, 1.5]`. Each bidder's CQIs scatter by up to 3
/// around a personal level in `[3, 12]`.
pub fn random_extended_instance<R: Rng>(rng: &mut R) -> (SlotConfig, Vec<ExtendedBid>) {
    let n = [16usize, 24, 32][rng.random_range(0..3)];
    let s = [2usize, 4][rng.random_range(0..2)];
    let config = SlotConfig::new(n, s, default_rate_table()).expect("valid grid");
    let count = rng.random_range(3..=10u32);
    let bids = (1..=count)
        .map(|id| {
            let demand = rng.random_range(1..=n / 2 - 1);
            let unit = ratio(rng.random_range(500..=1500), 1000);
            let level: i32 = rng.random_range(3..=12);
            let cqi = (0..config.num_subbands())
                .map(|_| (level + rng.random_range(-3..=3)).clamp(0, 15) as u8)
                .collect();
            ExtendedBid::new(id, kind(rng), demand, unit, cqi)
        })
        .collect();
    (config, bids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use spectrum_auction::{validate_basic, validate_extended};

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (cfg, bids) = random_basic_instance(&mut rng);
            assert_eq!(validate_basic(&cfg, &bids), Ok(()));
            let (cfg, bids) = random_extended_instance(&mut rng);
            assert_eq!(validate_extended(&cfg, &bids), Ok(()));
            assert!(cfg.num_rbs() <= 32 && bids.len() <= 14);
        }
    }
}
