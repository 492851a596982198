//! Generational genetic algorithm over fixed-length bitstring genomes.
//!
//! Each generation: evaluate the population, copy the `elitism` best
//! individuals unchanged, and fill the rest with offspring produced by
//! tournament selection, single-point crossover and per-bit mutation.
//! Elites are evaluated again in the next generation, so a run performs
//! `population_size * (generations + 1)` evaluations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BatchEvaluator, Proposal};
use crate::space::{decode_genome, Genome, GenomeLayout};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Must match the total bits of the space's genome layout.
    pub genome_length: usize,
    pub init_bit_probability: f64,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    /// Per-bit flip probability; `1 / genome_length` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    /// Population 2, 8 generations, 8-bit genomes, fair coin initialization.
    fn default() -> Self {
        GaConfig {
            population_size: 2,
            generations: 8,
            genome_length: 8,
            init_bit_probability: 0.5,
            tournament_size: 2,
            crossover_probability: 0.9,
            mutation_rate: None,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn mutation_rate(&self) -> f64 {
        self.mutation_rate
            .unwrap_or(1.0 / self.genome_length.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.genome_length == 0 {
            return Err(Error::Config("genome_length must be positive".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament_size must be positive".into()));
        }
        if self.elitism >= self.population_size {
            return Err(Error::Config(
                "elitism must be smaller than population_size".into(),
            ));
        }
        for (name, p) in [
            ("init_bit_probability", self.init_bit_probability),
            ("crossover_probability", self.crossover_probability),
            ("mutation_rate", self.mutation_rate()),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genome: Genome) -> Self {
        Individual {
            genome,
            fitness: None,
        }
    }
}

/// `population_size` genomes with bits drawn independently as Bernoulli(p).
pub fn ga_init<R: Rng + ?Sized>(config: &GaConfig, rng: &mut R) -> Vec<Genome> {
    (0..config.population_size)
        .map(|_| {
            Genome::new(
                (0..config.genome_length)
                    .map(|_| rng.random_bool(config.init_bit_probability))
                    .collect(),
            )
        })
        .collect()
}

fn fitness_of(population: &[Individual], i: usize) -> Result<f64> {
    population[i]
        .fitness
        .ok_or_else(|| Error::Contract(format!("individual {i} has no fitness")))
}

/// One tournament: `size` draws with replacement; highest fitness wins,
/// lower index on ties.
pub fn tournament<R: Rng + ?Sized>(
    population: &[Individual],
    size: usize,
    rng: &mut R,
) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::Contract("tournament on an empty population".into()));
    }
    for i in 0..population.len() {
        fitness_of(population, i)?;
    }
    let mut winner: Option<(usize, f64)> = None;
    for _ in 0..size.max(1) {
        let i = rng.random_range(0..population.len());
        let f = fitness_of(population, i)?;
        winner = match winner {
            Some((w, wf)) if wf > f || (wf == f && w < i) => Some((w, wf)),
            _ => Some((i, f)),
        };
    }
    Ok(winner.expect("at least one draw").0)
}

/// Two independent tournaments. The same individual may be picked twice.
pub fn ga_select<R: Rng + ?Sized>(
    population: &[Individual],
    tournament_size: usize,
    rng: &mut R,
) -> Result<(usize, usize)> {
    Ok((
        tournament(population, tournament_size, rng)?,
        tournament(population, tournament_size, rng)?,
    ))
}

/// Swaps the tails of two genomes after position `cut`.
pub fn crossover_at(a: &Genome, b: &Genome, cut: usize) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(Error::Codec(format!(
            "crossover of genomes with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let cut = cut.min(a.len());
    let mut x = a.bits()[..cut].to_vec();
    x.extend_from_slice(&b.bits()[cut..]);
    let mut y = b.bits()[..cut].to_vec();
    y.extend_from_slice(&a.bits()[cut..]);
    Ok((Genome::new(x), Genome::new(y)))
}

/// With probability `probability`, single-point crossover at a cut drawn
/// uniformly from `1..len`; otherwise copies of the parents.
pub fn ga_crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    probability: f64,
    rng: &mut R,
) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return crossover_at(a, b, 0);
    }
    if rng.random_bool(probability) && a.len() >= 2 {
        let cut = rng.random_range(1..a.len());
        crossover_at(a, b, cut)
    } else {
        Ok((a.clone(), b.clone()))
    }
}

/// Flips each bit independently with probability `rate`.
pub fn ga_mutate<R: Rng + ?Sized>(genome: &Genome, rate: f64, rng: &mut R) -> Genome {
    let mut out = genome.clone();
    for bit in out.bits_mut() {
        if rng.random_bool(rate) {
            *bit = !*bit;
        }
    }
    out
}

/// Indices of the `k` fittest individuals, fitness descending then index.
fn elites(population: &[Individual], k: usize) -> Result<Vec<usize>> {
    let mut order: Vec<(usize, f64)> = (0..population.len())
        .map(|i| fitness_of(population, i).map(|f| (i, f)))
        .collect::<Result<_>>()?;
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(order.into_iter().take(k).map(|(i, _)| i).collect())
}

/// Per-generation progress of a GA run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaHistory {
    /// Best fitness within each evaluated generation (index 0 = initial).
    pub generation_best: Vec<f64>,
    /// Best fitness seen up to and including each generation.
    pub best_so_far: Vec<f64>,
    /// Best individual ever evaluated, earliest on ties.
    pub best: Option<Individual>,
    pub evaluations: usize,
}

fn evaluate_generation<E: BatchEvaluator>(
    population: &mut [Individual],
    generation: u32,
    layout: &GenomeLayout,
    evaluator: &mut E,
    history: &mut GaHistory,
) -> Result<()> {
    let batch = population
        .iter()
        .map(|ind| {
            Ok(Proposal {
                candidate: decode_genome(&ind.genome, layout)?,
                genome: Some(ind.genome.clone()),
                generation: Some(generation),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let results = evaluator.evaluate_batch(&batch)?;
    if results.len() != population.len() {
        return Err(Error::Contract(format!(
            "evaluator returned {} results for {} proposals",
            results.len(),
            population.len()
        )));
    }
    history.evaluations += results.len();

    let mut gen_best = f64::NEG_INFINITY;
    for (ind, result) in population.iter_mut().zip(&results) {
        ind.fitness = Some(result.fitness);
        gen_best = gen_best.max(result.fitness);
        if history
            .best
            .as_ref()
            .is_none_or(|b| result.fitness > b.fitness.unwrap_or(f64::NEG_INFINITY))
        {
            history.best = Some(ind.clone());
        }
    }
    let so_far = history
        .best_so_far
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
        .max(gen_best);
    history.generation_best.push(gen_best);
    history.best_so_far.push(so_far);
    Ok(())
}

/// Runs the generational loop; stops after `generations` offspring
/// generations.
pub fn ga_run<E: BatchEvaluator>(
    config: &GaConfig,
    layout: &GenomeLayout,
    evaluator: &mut E,
) -> Result<GaHistory> {
    config.validate()?;
    if config.genome_length != layout.total_bits() {
        return Err(Error::Config(format!(
            "genome_length {} does not match the {}-bit layout",
            config.genome_length,
            layout.total_bits()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = GaHistory::default();
    let mut population: Vec<Individual> = ga_init(config, &mut rng)
        .into_iter()
        .map(Individual::new)
        .collect();
    evaluate_generation(&mut population, 0, layout, evaluator, &mut history)?;

    let rate = config.mutation_rate();
    for generation in 1..=config.generations {
        let mut next: Vec<Individual> = elites(&population, config.elitism)?
            .into_iter()
            .map(|i| Individual::new(population[i].genome.clone()))
            .collect();
        while next.len() < config.population_size {
            let (a, b) = ga_select(&population, config.tournament_size, &mut rng)?;
            let (x, y) = ga_crossover(
                &population[a].genome,
                &population[b].genome,
                config.crossover_probability,
                &mut rng,
            )?;
            next.push(Individual::new(ga_mutate(&x, rate, &mut rng)));
            if next.len() < config.population_size {
                next.push(Individual::new(ga_mutate(&y, rate, &mut rng)));
            }
        }
        population = next;
        evaluate_generation(
            &mut population,
            generation as u32,
            layout,
            evaluator,
            &mut history,
        )?;
    }
    Ok(history)
}
