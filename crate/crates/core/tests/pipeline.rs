use std::time::{Duration, Instant};

use credex::ecm::{Component, EcmConfig, FocalPolicy, SynthConfig};
use credex::explain::report_csv;
use credex::partition::{load_partition, save_partition};
use credex::*;

fn fitted(preset: Preset, policy: FocalPolicy) -> (Dataset, EcmFit) {
    let data = synth_generate(&preset.config(0)).unwrap();
    let mut cfg = EcmConfig::new(preset.n_clusters());
    cfg.focal_policy = policy;
    let fit = ecm_fit(&data, &cfg).unwrap();
    (data, fit)
}

#[test]
fn partition_file_round_trip_is_bit_exact() {
    let (data, fit) = fitted(Preset::Full3, FocalPolicy::All);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    save_partition(&path, &data, &fit.partition, &fit.centroids).unwrap();
    let (d2, p2, c2) = load_partition(&path).unwrap();
    assert_eq!(d2, data);
    assert_eq!(p2, fit.partition);
    assert_eq!(c2.points(), fit.centroids.points());

    let bundle = PartitionBundle::new(d2, p2, c2).unwrap();
    assert_eq!(bundle.to_json(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn trees_survive_serialization() {
    let (data, fit) = fitted(Preset::Easy, FocalPolicy::All);
    for lambda in Lambda::parse_list("-inf,-1,0,1,inf").unwrap() {
        let cfg = IemmConfig::new(lambda);
        let tree = iemm_fit(&data, &fit.partition, &fit.centroids, &cfg).unwrap();
        let back = ExplainerTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(back.to_json(), tree.to_json());
        for row in data.rows() {
            assert_eq!(back.predict(row).unwrap(), tree.predict(row).unwrap());
        }
        let a = tree_total_mistakeness(&tree, &data, &fit.partition, &cfg).unwrap();
        let b = tree_total_mistakeness(&back, &data, &fit.partition, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn explanations_agree_with_the_tree() {
    let (data, fit) = fitted(Preset::Full3, FocalPolicy::SingletonsPlusOmega);
    let tree = iemm_fit(&data, &fit.partition, &fit.centroids, &IemmConfig::new(Lambda::new(1.0).unwrap())).unwrap();
    let dnf = tree_to_dnf(&tree, data.feature_names());
    for row in data.rows() {
        let hit = dnf.satisfied_by(row);
        assert_eq!(hit, vec![tree.predict_index(row).unwrap()]);
    }
    let back = DnfExplanation::from_json(&credex::explain::dnf_json(&dnf)).unwrap();
    assert_eq!(back.to_string(), dnf.to_string());
}

#[test]
fn report_round_trips_and_ranks() {
    let (data, fit) = fitted(Preset::Easy, FocalPolicy::All);
    let lambdas = Lambda::parse_list("-inf,0,inf").unwrap();
    let report = representativeness_matrix(&data, &fit.partition, &fit.centroids, &lambdas, &lambdas).unwrap();
    let back = RepresentativenessReport::from_json(&credex::explain::report_json(&report)).unwrap();
    assert_eq!(back, report);
    assert!(report.values.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(report_csv(&report).lines().count(), 4);
}

#[test]
fn hard_partition_is_represented_without_mistakes() {
    // Two well separated groups labelled by a vertical cut.
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { i as f64 } else { 50.0 + i as f64 }, (i % 3) as f64]).collect();
    let data = Dataset::from_rows(&rows).unwrap();
    let hard = HardClustering::new((0..20).map(|i| usize::from(i >= 10)).collect(), 2).unwrap();
    let frame = Frame::numbered(2).unwrap();
    let p = CredalPartition::from_hard(frame, &hard).unwrap();
    let centroids = CentroidSet::new(vec![vec![4.5, 1.0], vec![64.5, 1.0]]).unwrap();
    let cfg = IemmConfig::new(Lambda::new(0.0).unwrap());
    let tree = iemm_fit(&data, &p, &centroids, &cfg).unwrap();
    assert_eq!(tree_total_mistakeness(&tree, &data, &p, &cfg).unwrap(), 0.0);
    let check = check_representative(&tree, &data, &p, &UtilitySpec::new(Lambda::INFINITY)).unwrap();
    assert!(check.representative && check.exact);
}

fn blobs(n_per: usize) -> Dataset {
    let comp = |c: [f64; 2]| Component { center: c.to_vec(), sigma: 1.0, count: n_per };
    synth_generate(&SynthConfig { components: vec![comp([0.0, 0.0]), comp([6.0, 0.0]), comp([3.0, 5.0])], outliers: vec![], seed: 3 })
        .unwrap()
}

fn best_fit_time(data: &Dataset, fit: &EcmFit) -> Duration {
    let cfg = IemmConfig::new(Lambda::INFINITY);
    (0..5)
        .map(|_| {
            let t = Instant::now();
            iemm_fit(data, &fit.partition, &fit.centroids, &cfg).unwrap();
            t.elapsed()
        })
        .min()
        .unwrap()
}

/// Doubling N should cost roughly 2× (N log N). Timing is noisy, so this only
/// warns; a hard failure is reserved for clearly super-linear growth.
#[test]
fn fit_time_scales_near_linearly() {
    let ecm = EcmConfig::new(3);
    let small = blobs(500);
    let large = blobs(1000);
    let fs = ecm_fit(&small, &ecm).unwrap();
    let fl = ecm_fit(&large, &ecm).unwrap();
    let ts = best_fit_time(&small, &fs);
    let tl = best_fit_time(&large, &fl);
    let ratio = tl.as_secs_f64() / ts.as_secs_f64().max(1e-9);
    eprintln!("iemm fit: N={} {:?}, N={} {:?}, ratio {ratio:.2}", small.len(), ts, large.len(), tl);
    if ratio >= 3.0 {
        eprintln!("warning: doubling N grew fit time by {ratio:.2}x");
    }
    assert!(ratio < 8.0, "fit time grew {ratio:.2}x when N doubled");
}
