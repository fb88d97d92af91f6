//! Synthetic stand-ins for the case-study data: a credit-application table,
//! a sparse page-like matrix and a donor-mailing table.

use rand::distr::Distribution;
use rand::seq::index::sample_weighted;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Binomial, Gamma, LogNormal, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::schema::{Feature, FeatureSchema, Instance};

fn dist<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| Error::InvalidArgument(format!("generator parameter: {e}")))
}

fn bernoulli<R: Rng>(rng: &mut R, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

fn numeric_schema(names: &[&str]) -> Result<FeatureSchema> {
    FeatureSchema::new(names.iter().map(|n| Feature::numeric(*n)).collect())
}

pub const CREDIT_FEATURES: [&str; 12] = [
    "loan_amnt",
    "installment",
    "annual_inc",
    "dti",
    "revol_bal",
    "delinq_2yrs",
    "open_acc",
    "pub_rec",
    "fico_range_high",
    "fico_range_low",
    "revol_util",
    "cr_hist",
];

/// Loan applications driven by one latent risk factor; the target is 1 for
/// a default.
///
/// `fico_range_high` is always `fico_range_low + 4` and `installment` is a
/// fixed fraction of `loan_amnt`, so both pairs are collinear.
pub fn credit_dataset<R: Rng>(n: usize, rng: &mut R) -> Result<Dataset> {
    let mut rows = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let risk: f64 = rng.sample(StandardNormal);
        let mut noise = || -> f64 { rng.sample(StandardNormal) };
        let fico_low =
            (5.0 * ((690.0 - 35.0 * risk + 20.0 * noise()) / 5.0).round()).clamp(610.0, 845.0);
        let annual_inc = (65_000.0 * (0.45 * noise() - 0.15 * risk).exp() / 100.0).round() * 100.0;
        let loan_amnt =
            (25.0 * (12_000.0 * (0.55 * noise()).exp() / 25.0).round()).clamp(1_000.0, 40_000.0);
        let installment = (loan_amnt * 0.033_69 * 100.0).round() / 100.0;
        let dti = ((18.0 + 5.0 * risk + 6.0 * noise()) * 100.0)
            .round()
            .clamp(0.0, 4_500.0)
            / 100.0;
        let revol_bal = (12_000.0 * (0.9 * noise()).exp()).round();
        let revol_util = ((50.0 + 15.0 * risk + 20.0 * noise()) * 10.0)
            .round()
            .clamp(0.0, 1_200.0)
            / 10.0;
        let cr_hist = (200.0 - 25.0 * risk + 80.0 * noise())
            .round()
            .clamp(36.0, 600.0);
        let open_acc = dist(Poisson::new(10.0))?.sample(rng) + 1.0;
        let delinq_2yrs = dist(Poisson::new(0.3 * (0.6 * risk).exp()))?.sample(rng);
        let pub_rec = dist(Poisson::new(0.15 * (0.5 * risk).exp()))?.sample(rng);
        let logit = -1.55
            + 0.85 * risk
            + 0.35 * (loan_amnt / annual_inc * 10.0 - 2.0)
            + 0.25 * delinq_2yrs
            + 0.3 * pub_rec;
        target.push(bernoulli(rng, sigmoid(logit)));
        rows.push(Instance::new(vec![
            loan_amnt,
            installment,
            annual_inc,
            dti,
            revol_bal,
            delinq_2yrs,
            open_acc,
            pub_rec,
            fico_low + 4.0,
            fico_low,
            revol_util,
            cr_hist,
        ]));
    }
    Dataset::new(numeric_schema(&CREDIT_FEATURES)?, rows, Some(target))
}

pub const DONATION_FEATURES: [&str; 28] = [
    "AGE", "WEALTH2", "HIT", "MALEMILI", "MALEVET", "VIETVETS", "WWIIVETS", "LOCALGOV", "STATEGOV",
    "FEDGOV", "ETH7", "ETH10", "ETH11", "AFC1", "AFC2", "AFC3", "AFC4", "AFC5", "AFC6", "VC1",
    "VC2", "VC3", "VC4", "NUMPRM12", "CARDGIFT", "TIMELAG", "AVGGIFT", "LASTGIFT",
];

/// A donor-mailing table and the gift amounts.
pub struct DonationData {
    /// Target is 1 for households that responded with a gift.
    pub data: Dataset,
    /// Gift amount per row, 0 for non-donors.
    pub amounts: Vec<f64>,
}

/// Households driven by latent engagement and wealth factors. Response
/// falls with `AVGGIFT` while gift size rises with it.
pub fn donation_dataset<R: Rng>(n: usize, rng: &mut R) -> Result<DonationData> {
    let mut rows = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    let mut amounts = Vec::with_capacity(n);
    let pct = |x: f64| x.round().clamp(0.0, 99.0);
    for _ in 0..n {
        let engagement: f64 = rng.sample(StandardNormal);
        let wealth: f64 = rng.sample(StandardNormal);
        let mut z = || -> f64 { rng.sample(StandardNormal) };
        let age = (60.0 + 5.0 * engagement + 15.0 * z())
            .round()
            .clamp(18.0, 98.0);
        let wealth2 = (4.5 + 2.0 * wealth + z()).round().clamp(0.0, 9.0);
        let vets = 20.0 + 0.3 * (age - 60.0) + 8.0 * z();
        let mut values = vec![
            age,
            wealth2,
            0.0,
            pct(2.0 + 2.0 * z().abs()),
            pct(vets),
            pct(0.4 * vets + 5.0 * z()),
            pct(0.3 * vets + 5.0 * z()),
            pct(5.0 + 3.0 * z()),
            pct(4.0 + 3.0 * z()),
            pct(3.0 + 2.0 * z()),
            pct(10.0 + 8.0 * z()),
            pct(5.0 + 4.0 * z()),
            pct(3.0 + 3.0 * z()),
        ];
        for base in [30.0, 25.0, 20.0, 12.0, 8.0, 5.0] {
            values.push(pct(base + 5.0 * z()));
        }
        for base in [25.0, 15.0, 10.0, 5.0] {
            values.push(pct(base + 6.0 * z()));
        }
        let timelag = (6.0 * (0.6 * z()).exp()).round().max(0.0);
        let avggift = ((12.0 * (0.3 * wealth + 0.45 * z()).exp()) * 100.0).round() / 100.0;
        let lastgift = (avggift * (0.3 * z()).exp()).round().max(1.0);
        let amount_noise = z();
        values[2] = dist(Poisson::new((1.0 + 0.5 * engagement).exp()))?.sample(rng);
        let numprm12 = dist(Poisson::new((12.0 + 3.0 * engagement).max(1.0)))?.sample(rng);
        let cardgift = dist(Poisson::new((1.2 + 0.6 * engagement).exp()))?.sample(rng);
        values.extend([numprm12, cardgift, timelag, avggift, lastgift]);

        let logit = -3.0 + 0.55 * engagement + 0.12 * cardgift - 0.045 * avggift + 0.03 * numprm12
            - 0.04 * timelag
            + 0.05 * wealth2;
        let donated = bernoulli(rng, sigmoid(logit));
        let amount = if donated == 1.0 {
            (2.0 + 0.55 * lastgift + 0.45 * avggift + 0.8 * wealth2 + 2.0 * amount_noise).max(1.0)
        } else {
            0.0
        };
        rows.push(Instance::new(values));
        target.push(donated);
        amounts.push(amount);
    }
    Ok(DonationData {
        data: Dataset::new(numeric_schema(&DONATION_FEATURES)?, rows, Some(target))?,
        amounts,
    })
}

/// Parameters of the sparse page-like generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikesConfig {
    pub pages: usize,
    /// Exponent of the Zipf-like page popularity.
    pub popularity_exponent: f64,
    /// Share of pages with a large effect on the label.
    pub strong_fraction: f64,
    pub strong_weight: f64,
    /// Mean number of strong pages a user likes, independent of activity.
    pub strong_rate: f64,
    /// Share of pages with a small positive effect.
    pub topic_fraction: f64,
    pub topic_weight: f64,
    /// Gamma shape of topic weights; large values make them near-equal.
    pub topic_shape: f64,
    /// Topic pages come in groups liked together.
    pub bundle: usize,
    /// Flattening exponent applied to topic-page popularity.
    pub topic_popularity_exponent: f64,
    pub generic_mean: f64,
    pub generic_sd: f64,
    /// Beta parameters of a user's propensity to like topic pages.
    pub interest_alpha: f64,
    pub interest_beta: f64,
    pub intercept: f64,
    /// Log-normal activity of the population: `min_likes + LogNormal`.
    pub likes_median: f64,
    pub likes_spread: f64,
    pub min_likes: usize,
    pub max_likes: usize,
}

impl Default for LikesConfig {
    fn default() -> Self {
        LikesConfig {
            pages: 1000,
            popularity_exponent: 0.8,
            strong_fraction: 0.02,
            strong_weight: 2.5,
            strong_rate: 0.3,
            topic_fraction: 0.5,
            topic_weight: 0.2,
            topic_shape: 100.0,
            bundle: 2,
            topic_popularity_exponent: 0.25,
            generic_mean: -0.03,
            generic_sd: 0.05,
            interest_alpha: 0.6,
            interest_beta: 3.0,
            intercept: -3.0,
            likes_median: 14.0,
            likes_spread: 0.9,
            min_likes: 4,
            max_likes: 200,
        }
    }
}

impl LikesConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("likes generator: {what}")));
        if self.pages < 10 {
            return bad("at least 10 pages are required");
        }
        if self.bundle == 0 {
            return bad("bundle size must be >= 1");
        }
        if !(self.strong_fraction >= 0.0
            && self.topic_fraction >= 0.0
            && self.strong_fraction + self.topic_fraction < 1.0)
        {
            return bad("strong and topic fractions must be >= 0 and sum below 1");
        }
        if self.min_likes == 0 || self.min_likes > self.max_likes {
            return bad("like counts need 1 <= min_likes <= max_likes");
        }
        let generic = self.pages - self.pages_of(self.strong_fraction) - self.topic_pages();
        if generic < self.max_likes {
            return bad("fewer generic pages than max_likes");
        }
        Ok(())
    }

    fn pages_of(&self, fraction: f64) -> usize {
        (fraction * self.pages as f64).floor() as usize
    }

    fn topic_pages(&self) -> usize {
        self.pages_of(self.topic_fraction) / self.bundle * self.bundle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageKind {
    Strong,
    Topic,
    Generic,
}

/// Pages, their true label effects and how users pick them.
#[derive(Debug, Clone)]
pub struct LikesWorld {
    config: LikesConfig,
    kinds: Vec<PageKind>,
    weights: Vec<f64>,
    popularity: Vec<f64>,
    strong: Vec<usize>,
    /// Pages of each bundle.
    bundles: Vec<Vec<usize>>,
    generic: Vec<usize>,
}

impl LikesWorld {
    pub fn generate<R: Rng>(config: &LikesConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let m = config.pages;
        let mut ranks: Vec<usize> = (0..m).collect();
        ranks.shuffle(rng);
        let popularity: Vec<f64> = ranks
            .iter()
            .map(|&r| (r as f64 + 1.0).powf(-config.popularity_exponent))
            .collect();

        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let n_strong = config.pages_of(config.strong_fraction);
        let n_topic = config.topic_pages();
        let mut strong = order[..n_strong].to_vec();
        strong.sort_unstable();
        let topic = &order[n_strong..n_strong + n_topic];
        let mut generic = order[n_strong + n_topic..].to_vec();
        generic.sort_unstable();

        let mut kinds = vec![PageKind::Generic; m];
        let mut weights = vec![0.0; m];
        let generic_weight = dist(Normal::new(config.generic_mean, config.generic_sd))?;
        for &j in &generic {
            weights[j] = generic_weight.sample(rng);
        }
        let strong_weight = dist(Gamma::new(4.0, config.strong_weight / 4.0))?;
        for &j in &strong {
            kinds[j] = PageKind::Strong;
            weights[j] = strong_weight.sample(rng);
        }
        let topic_weight = dist(Gamma::new(
            config.topic_shape,
            config.topic_weight / config.topic_shape,
        ))?;
        let bundles: Vec<Vec<usize>> = topic.chunks(config.bundle).map(|c| c.to_vec()).collect();
        for bundle in &bundles {
            let w = topic_weight.sample(rng);
            for &j in bundle {
                kinds[j] = PageKind::Topic;
                weights[j] = w;
            }
        }
        Ok(LikesWorld {
            config: config.clone(),
            kinds,
            weights,
            popularity,
            strong,
            bundles,
            generic,
        })
    }

    pub fn config(&self) -> &LikesConfig {
        &self.config
    }

    pub fn pages(&self) -> usize {
        self.config.pages
    }

    pub fn kinds(&self) -> &[PageKind] {
        &self.kinds
    }

    /// True effect of each page on the label's log-odds.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        let width = self.pages().to_string().len();
        FeatureSchema::new(
            (0..self.pages())
                .map(|j| Feature::binary(format!("page_{j:0width$}")))
                .collect(),
        )
    }

    /// A like count drawn from the population's activity distribution.
    pub fn population_likes<R: Rng>(&self, rng: &mut R) -> Result<usize> {
        let c = &self.config;
        let extra = dist(LogNormal::new(c.likes_median.ln(), c.likes_spread))?.sample(rng);
        Ok((c.min_likes + extra.floor().min(1e6) as usize).min(c.max_likes))
    }

    /// The sorted pages liked by a fresh user with `likes` likes.
    pub fn sample_user<R: Rng>(&self, likes: usize, rng: &mut R) -> Result<Vec<usize>> {
        let c = &self.config;
        let interest = dist(Beta::new(c.interest_alpha, c.interest_beta))?.sample(rng);
        let n_strong = if c.strong_rate > 0.0 {
            let draw = dist(Poisson::new(c.strong_rate))?.sample(rng) as usize;
            draw.min(likes).min(self.strong.len())
        } else {
            0
        };
        let topic_draw =
            dist(Binomial::new((likes - n_strong) as u64, interest))?.sample(rng) as usize;
        let n_bundles = (topic_draw / c.bundle).min(self.bundles.len());
        let n_generic = likes - n_strong - n_bundles * c.bundle;

        let mut pages = Vec::with_capacity(likes);
        let pick =
            |rng: &mut R, pool: &[usize], amount: usize, exponent: f64| -> Result<Vec<usize>> {
                let chosen = sample_weighted(
                    rng,
                    pool.len(),
                    |i| self.popularity[pool[i]].powf(exponent),
                    amount,
                )
                .map_err(|e| Error::InvalidArgument(format!("page sampling: {e}")))?;
                Ok(chosen.into_iter().map(|i| pool[i]).collect())
            };
        pages.extend(pick(rng, &self.strong, n_strong, 1.0)?);
        let heads: Vec<usize> = self.bundles.iter().map(|b| b[0]).collect();
        let chosen = sample_weighted(
            rng,
            heads.len(),
            |i| self.popularity[heads[i]].powf(c.topic_popularity_exponent),
            n_bundles,
        )
        .map_err(|e| Error::InvalidArgument(format!("page sampling: {e}")))?;
        for b in chosen {
            pages.extend_from_slice(&self.bundles[b]);
        }
        pages.extend(pick(rng, &self.generic, n_generic, 1.0)?);
        pages.sort_unstable();
        Ok(pages)
    }

    /// Draws the 0/1 label of a user liking `pages`.
    pub fn label<R: Rng>(&self, pages: &[usize], rng: &mut R) -> f64 {
        let z = pages
            .iter()
            .fold(self.config.intercept, |acc, &j| acc + self.weights[j]);
        bernoulli(rng, sigmoid(z))
    }

    /// Dense 0/1 instance for a sorted page list.
    pub fn instance(&self, pages: &[usize]) -> Instance {
        let mut values = vec![0.0; self.pages()];
        for &j in pages {
            values[j] = 1.0;
        }
        Instance::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn credit_rows_keep_their_collinear_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = credit_dataset(300, &mut rng).unwrap();
        assert_eq!(data.schema().len(), 12);
        for row in data.rows() {
            let v = row.values();
            assert_eq!(v[8], v[9] + 4.0);
            assert!((v[1] - v[0] * 0.033_69).abs() <= 0.005 + 1e-9);
        }
        let defaults: f64 = data.target().unwrap().iter().sum();
        assert!(defaults > 20.0 && defaults < 150.0, "{defaults}");
    }

    #[test]
    fn donation_amounts_only_for_donors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = donation_dataset(2000, &mut rng).unwrap();
        assert_eq!(d.data.schema().len(), 28);
        let y = d.data.target().unwrap();
        for (&t, &a) in y.iter().zip(&d.amounts) {
            assert_eq!(t == 1.0, a > 0.0);
        }
        let rate = y.iter().sum::<f64>() / y.len() as f64;
        assert!(rate > 0.02 && rate < 0.3, "{rate}");
    }

    #[test]
    fn users_like_exactly_the_requested_number_of_pages() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let world = LikesWorld::generate(&LikesConfig::default(), &mut rng).unwrap();
        for likes in [4, 17, 60, 200] {
            let pages = world.sample_user(likes, &mut rng).unwrap();
            assert_eq!(pages.len(), likes);
            assert!(pages.windows(2).all(|w| w[0] < w[1]));
        }
        let bundled = world
            .kinds()
            .iter()
            .filter(|k| **k == PageKind::Topic)
            .count();
        assert_eq!(bundled % 2, 0);
    }

    #[test]
    fn world_is_seed_deterministic() {
        let a = LikesWorld::generate(&LikesConfig::default(), &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        let b = LikesWorld::generate(&LikesConfig::default(), &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_eq!(a.kinds(), b.kinds());
    }
}
