use std::time::Instant;

use gtenn::cluster::{kmeans, som_assign, som_fit, SomConfig};
use gtenn::lfr::{generate_dynamic_lfr, LfrConfig};
use gtenn::metrics::evaluate_sequence;
use gtenn::spatial::GcnConfig;
use gtenn::train::{train, AblationMode, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mu: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.1);
    let seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1);
    let epochs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(300);
    let lr: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let ablation = args
        .get(5)
        .map(|s| AblationMode::parse(s).unwrap())
        .unwrap_or(AblationMode::Full);
    let churn: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0.1);
    let margin: f64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let avg_deg: f64 = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(10.0);
    let max_deg: usize = args.get(9).map(|s| s.parse().unwrap()).unwrap_or(20);

    let lfr = LfrConfig {
        nodes: 200,
        snapshots: 5,
        mu,
        avg_degree: avg_deg,
        max_degree: max_deg,
        min_community: 10,
        max_community: 40,
        gamma: 2.5,
        beta: 1.5,
        churn,
        seed,
    };
    let t0 = Instant::now();
    let net = generate_dynamic_lfr(&lfr).unwrap();
    eprintln!("gen: {:?}", t0.elapsed());
    let truth = net.ground_truth().unwrap().to_vec();
    for p in &truth {
        eprint!("{} ", p.community_count());
    }
    eprintln!("communities");

    let model = GcnConfig::two_layer(32);
    let cfg = TrainConfig { epochs, lr, seed, ablation, margin, ..TrainConfig::default() };
    let t0 = Instant::now();
    let out = train::<f64>(&net, &model, &cfg).unwrap();
    eprintln!(
        "train: {:?}  loss {} -> {}",
        t0.elapsed(),
        out.log.first().unwrap().total,
        out.log.last().unwrap().total
    );

    let t0 = Instant::now();
    let mut som_parts = Vec::new();
    let mut km_parts = Vec::new();
    for (i, h) in out.embeddings.iter().enumerate() {
        let sc = SomConfig::for_points(h.rows(), seed + i as u64);
        let units = som_fit(h, &sc).unwrap();
        som_parts.push(som_assign(h, &units, i + 1).unwrap());
        let k = truth[i].community_count();
        km_parts.push(kmeans(h, k, seed + i as u64, i + 1).unwrap());
    }
    eprintln!("cluster: {:?}", t0.elapsed());

    let som_rep = evaluate_sequence(&som_parts, &truth).unwrap();
    let km_rep = evaluate_sequence(&km_parts, &truth).unwrap();
    for p in &som_parts {
        eprint!("{} ", p.community_count());
    }
    eprintln!("SOM communities");
    println!(
        "mu={mu} seed={seed} ep={epochs} lr={lr} churn={churn} m={margin} {:?}: loss {:.3} SOM nmi {:.4} pur {:.4} | KM nmi {:.4} pur {:.4}",
        ablation,
        out.log.last().unwrap().total,
        som_rep.mean_nmi,
        som_rep.mean_purity,
        km_rep.mean_nmi,
        km_rep.mean_purity
    );
}
