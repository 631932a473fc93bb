//! Compare the analytic gradient of the adaptation loss with central
//! differences on a tiny network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_da::model::{Architecture, KernelParams, LossWeights, Matrix, ModelParams, TransferKind};
use tactile_da::train::{compute_gradients, evaluate_loss, LossOptions, SourceBatch, TargetBatch};

fn main() -> tactile_da::Result<()> {
    let arch = Architecture {
        image_height: 8,
        image_width: 8,
        channels: vec![4, 6],
        bottleneck_dim: 8,
        num_classes: 4,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = ModelParams::init(&arch, 3)?;
    let mut batch = |shift: f64| -> Vec<Vec<f64>> {
        (0..4)
            .map(|_| (0..arch.input_len()).map(|_| rng.gen::<f64>() + shift).collect())
            .collect()
    };
    let (xs, xt) = (batch(0.0), batch(0.3));
    let targets = Matrix::from_vec(4, 3, (0..12).map(|i| i as f64 / 12.0).collect())?;
    let mut labels = Matrix::zeros(4, 4);
    for (i, c) in [0, 1, 2, 1].into_iter().enumerate() {
        labels.set(i, c, 1.0);
    }
    let src = SourceBatch {
        inputs: &xs,
        targets: &targets,
        labels: Some(&labels),
    };
    let tgt = TargetBatch { inputs: &xt };
    let opts = LossOptions {
        weights: LossWeights::ADAPT,
        transfer: TransferKind::Lmmd,
        kernel: KernelParams::default(),
        pseudo_label_grad: true,
    };

    let (_, grads) = compute_gradients(&params, &src, Some(&tgt), &opts)?;
    let h = 1e-5;
    for (ti, t) in params.tensors.iter().enumerate() {
        let (mut diff, mut ga, mut gf) = (0.0, 0.0, 0.0);
        for k in 0..t.data.len() {
            let mut p = params.clone();
            p.tensors[ti].data[k] += h;
            let up = evaluate_loss(&p, &src, Some(&tgt), &opts)?.total;
            p.tensors[ti].data[k] -= 2.0 * h;
            let down = evaluate_loss(&p, &src, Some(&tgt), &opts)?.total;
            let fd = (up - down) / (2.0 * h);
            let g = grads.tensors[ti].data[k];
            diff += (g - fd).powi(2);
            ga += g * g;
            gf += fd * fd;
        }
        let rel = diff.sqrt() / f64::max(ga, gf).sqrt().max(1e-12);
        println!("{:<26} {:>4} values  relative error {:.2e}", t.name, t.data.len(), rel);
    }
    Ok(())
}
