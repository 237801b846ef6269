# Train the Iris model three ways and watch the certified bound.
# Short runs here; `hybridlip experiment figure3 --out results` runs the full sweep.
from hybridlip.data import load_iris
from hybridlip.hybrid import default_model
from hybridlip.plotting import emit_plot
from hybridlip.train import MetricsLog, TrainConfig, train

data = load_iris(split_seed=0)
log = MetricsLog()
for method, lam in [("naive", 0.0), ("pgd", 0.0), ("lipreg", 0.01)]:
    run = train(default_model(0), data, TrainConfig(method=method, lam=lam, epochs=30, seed=0))
    last = run.rows[-1]
    print(f"{method:7s} loss {last['loss']:.3f}  test acc {last['test_acc']:.3f}  bound {last['lip_hybrid']:.3f}")
    log.extend(run)

emit_plot(log, "figure3", "training.svg")
print("wrote training.svg")
