"""
Stage driver: every stage reads its declared inputs from the dataset layout
and writes only its declared outputs
"""

from collections.abc import Callable, Sequence
from pathlib import Path

from loguru import logger

from udikit.core.classify import (
    ImperviousMap,
    KnnConfig,
    MapKind,
    average_composite,
    extract_signatures,
    knn_classify,
    read_signatures,
    reclassify_percent,
    write_signatures,
)
from udikit.core.forecast import (
    fit_all,
    project,
    read_models,
    read_shortfall_csv,
    recovery_month,
    shortfall,
    write_lines_csv,
    write_models,
    write_shortfall_csv,
)
from udikit.core.impact import (
    accuracy,
    read_impact_csv,
    read_sample,
    stratified_sample,
    summarize,
    write_accuracy_csv,
    write_impact_csv,
    write_sample,
)
from udikit.core.layout import EPOCHS, DatasetLayout
from udikit.core.months import MonthKey, month_range
from udikit.core.raster import BAND_NAMES, CombineMode, MultibandRaster
from udikit.core.raster_io import FORMATS, read_raster, read_viirs_pair, write_raster
from udikit.core.report import impact_chart, tract_chart
from udikit.core.tracts import join_census, read_census_csv, read_tracts
from udikit.core.udi import BASELINE_TAG, UdiRaster, brightness_on_grid, compute_udi, prestorm_baseline, udi_change
from udikit.core.zonal import FootprintCache, build_series, read_zonal_csv, write_zonal_csv, zonal_stats
from udikit.utils.config import Config
from udikit.utils.errors import DataError
from udikit.utils.performance import performance_monitor

STAGES = ("reclass", "signatures", "classify", "composite", "udi", "change", "zonal", "forecast", "impact", "report")

ProgressCallback = Callable[[str, int, int], None]


def read_image(image_dir: Path) -> MultibandRaster:
    """One raster per band file; known band names first, in their usual order"""
    files = {p.stem: p for p in sorted(image_dir.iterdir()) if p.suffix.lstrip(".") in FORMATS}
    if not files:
        msg = f"no band rasters in {image_dir}"
        raise DataError(msg)
    known = [b for b in BAND_NAMES if b in files]
    names = known + sorted(set(files) - set(known))
    return MultibandRaster({name: read_raster(files[name]) for name in names})


class Pipeline:
    """Runs the processing stages of one dataset"""

    def __init__(self, config: Config, progress: ProgressCallback | None = None):
        self.config = config
        self.layout = DatasetLayout(config.data_dir, config.output_dir, config.raster_format)
        self.footprints = FootprintCache()
        self.progress = progress

    def _tick(self, stage: str, done: int, total: int) -> None:
        if self.progress is not None:
            self.progress(stage, done, total)

    def _impervious(self, epoch: str) -> ImperviousMap:
        return ImperviousMap(read_raster(self.layout.impervious(epoch)), MapKind.COMPOSITE)

    def _tracts(self):
        tracts = read_tracts(self.layout.tracts)
        if self.layout.census.exists():
            tracts = join_census(tracts, read_census_csv(self.layout.census))
        return tracts

    def epoch_for(self, month: MonthKey) -> str:
        """Impervious composite paired with a month's brightness"""
        if self.config.impervious_pairing == "post" and month >= self.config.forecast_start:
            return "post"
        return "pre"

    # ------------------------------------------------------------ stages

    def reclass(self) -> Path:
        """Reference percent map -> 1-10 classes"""
        with performance_monitor.measure("reclass"):
            classes = reclassify_percent(read_raster(self.layout.reference))
            performance_monitor.count("reclass", 1)
            return write_raster(self.layout.reference_classes, classes.raster)

    def signatures(self, epoch: str = "pre", region: str | None = None) -> Path:
        """Class signatures from the epoch's imagery over the reference classes"""
        self.layout.require("signatures", self.layout.reference_classes)
        with performance_monitor.measure("signatures"):
            reference = ImperviousMap(read_raster(self.layout.reference_classes))
            images = [read_image(d) for d in self.layout.images(epoch)]
            if not images:
                msg = f"no {epoch} images under {self.layout.data_dir / 'images'}"
                raise DataError(msg)
            table = extract_signatures(reference, images, region)
            performance_monitor.count("signatures", int((table.support > 0).sum()))
            return write_signatures(self.layout.signatures(region), table)

    def classify(self, epochs: Sequence[str] = EPOCHS, region: str | None = None) -> list[Path]:
        """k-NN classification of every image"""
        self.layout.require("classify", self.layout.signatures(region))
        with performance_monitor.measure("classify"):
            table = read_signatures(self.layout.signatures(region), region)
            knn = KnnConfig(k=self.config.knn_k)
            written = []
            for epoch in epochs:
                for index, image_dir in enumerate(self.layout.images(epoch)):
                    labels = knn_classify(read_image(image_dir), table, knn)
                    written.append(write_raster(self.layout.classified(epoch, index), labels.raster))
            performance_monitor.count("classify", len(written))
            return written

    def composite(self) -> list[Path]:
        """Average the per-image maps of each epoch"""
        written = []
        with performance_monitor.measure("composite"):
            for epoch in EPOCHS:
                count = len(self.layout.images(epoch))
                paths = [self.layout.classified(epoch, i) for i in range(count)]
                if not paths:
                    msg = f"no {epoch} images to composite"
                    raise DataError(msg)
                self.layout.require("composite", *paths)
                maps = [ImperviousMap(read_raster(p)) for p in paths]
                written.append(write_raster(self.layout.impervious(epoch), average_composite(maps).raster))
            performance_monitor.count("composite", len(written))
        return written

    def udi(self) -> list[Path]:
        """Monthly UDI for every brightness month plus the pre-storm baseline"""
        months = self.layout.viirs_months()
        if not months:
            msg = f"no monthly composites under {self.layout.data_dir / 'viirs'}"
            raise DataError(msg)
        needed = sorted({self.epoch_for(m) for m in months})
        self.layout.require("udi", *(self.layout.impervious(e) for e in needed))

        written = []
        baseline_parts: list[UdiRaster] = []
        with performance_monitor.measure("udi"):
            impervious = {e: self._impervious(e) for e in needed}
            for done, month in enumerate(months, start=1):
                composite = read_viirs_pair(
                    self.layout.viirs_radiance(month), self.layout.viirs_observations(month), month
                )
                imp = impervious[self.epoch_for(month)]
                udi = compute_udi(imp, brightness_on_grid(composite.radiance, imp.geometry), month)
                written.append(write_raster(self.layout.udi(month), udi.raster))
                if self.config.baseline_start <= month <= self.config.baseline_end:
                    baseline_parts.append(udi)
                self._tick("udi", done, len(months))

            if baseline_parts:
                window = (self.config.baseline_start, self.config.baseline_end)
                written.append(write_raster(self.layout.udi_baseline, prestorm_baseline(baseline_parts, window).raster))
            else:
                logger.warning("no months inside the baseline window; baseline UDI not written")
            performance_monitor.count("udi", len(written))
        return written

    def change(self, mode: CombineMode | str = CombineMode.PERCENT_CHANGE) -> list[Path]:
        """Forecast-window UDI against the pre-storm baseline"""
        mode = CombineMode(mode)
        self.layout.require("change", self.layout.udi_baseline)
        written = []
        with performance_monitor.measure("change"):
            baseline = UdiRaster(read_raster(self.layout.udi_baseline), tag=BASELINE_TAG)
            for month in self.layout.udi_months():
                if not self.config.forecast_start <= month <= self.config.forecast_end:
                    continue
                monthly = UdiRaster(read_raster(self.layout.udi(month)), month)
                written.append(write_raster(self.layout.change(month, mode.value), udi_change(monthly, baseline, mode)))
            performance_monitor.count("change", len(written))
        return written

    def zonal(self) -> Path:
        """Per-tract statistics of every month's masked brightness, sharpened onto the reference grid"""
        months = self.layout.viirs_months()
        if not months:
            msg = f"no monthly composites under {self.layout.data_dir / 'viirs'}"
            raise DataError(msg)
        with performance_monitor.measure("zonal"):
            grid = read_raster(self.layout.reference).geometry
            footprints = self.footprints.footprints(self._tracts(), grid)
            records = []
            for done, month in enumerate(months, start=1):
                composite = read_viirs_pair(
                    self.layout.viirs_radiance(month), self.layout.viirs_observations(month), month
                )
                records.extend(zonal_stats(brightness_on_grid(composite.radiance, grid), footprints, month))
                self._tick("zonal", done, len(months))
            logger.debug(f"footprint cache: {self.footprints.get_stats()}")
            performance_monitor.count("zonal", len(records))
            return write_zonal_csv(self.layout.zonal, records)

    def forecast(self) -> list[Path]:
        """Fit per-tract models and write models, shortfalls and chart lines"""
        self.layout.require("forecast", self.layout.zonal)
        cfg = self.config
        with performance_monitor.measure("forecast"):
            series = build_series(read_zonal_csv(self.layout.zonal))
            models, skipped = fit_all(series, cfg.training_window(), cfg.seasonal_passes, cfg.seasonal_tolerance)
            if not models:
                msg = f"no tract could be fitted ({len(skipped)} skipped)"
                raise DataError(msg)

            reporting = month_range(min(cfg.report_start, cfg.forecast_start), cfg.forecast_end)
            records = []
            for tract_id, model in models.items():
                in_sample = {m: model.value(m) for m in reporting if m <= model.training_end}
                ahead = project(model, [m for m in reporting if m > model.training_end])
                tract_records = shortfall(model, {**in_sample, **ahead}, series[tract_id], cfg.significance_multiplier)
                records.extend(tract_records)
                recovered = recovery_month(tract_records, cfg.forecast_start)
                logger.info(f"tract {tract_id}: " + (f"recovered from {recovered}" if recovered else f"not recovered by {cfg.forecast_end}"))
            performance_monitor.count("forecast", len(records))

            return [
                write_models(self.layout.models, models.values()),
                write_shortfall_csv(self.layout.shortfall, records),
                write_lines_csv(self.layout.lines, models.values(), month_range(cfg.training_start, cfg.forecast_end)),
            ]

    def impact(self) -> Path:
        """Island estimates for every forecast month"""
        self.layout.require("impact", self.layout.shortfall, self.layout.models)
        cfg = self.config
        with performance_monitor.measure("impact"):
            models = read_models(self.layout.models, cfg.training_window())
            records = [
                r for r in read_shortfall_csv(self.layout.shortfall, models)
                if cfg.forecast_start <= r.month <= cfg.forecast_end
            ]
            summaries = summarize(records, self._tracts(), month_range(cfg.forecast_start, cfg.forecast_end))
            performance_monitor.count("impact", len(summaries))
            return write_impact_csv(self.layout.impact, summaries)

    def sample(self, n: int, seed: int, layer: str = "impervious") -> Path:
        """Stratified accuracy sample over the post-storm composite or the baseline UDI"""
        if layer == "udi":
            self.layout.require("sample", self.layout.udi_baseline)
            target = UdiRaster(read_raster(self.layout.udi_baseline), tag=BASELINE_TAG)
        elif layer == "impervious":
            self.layout.require("sample", self.layout.impervious("post"))
            target = self._impervious("post")
        else:
            msg = f"unknown sample layer {layer!r}"
            raise ValueError(msg)
        with performance_monitor.measure("sample"):
            drawn = stratified_sample(target, n, seed)
            performance_monitor.count("sample", len(drawn.points))
            return write_sample(self.layout.sample, drawn)

    def accuracy(self, sample_path: Path | None = None) -> Path:
        """Confusion table of an interpreted sample"""
        path = sample_path or self.layout.sample
        self.layout.require("accuracy", path)
        with performance_monitor.measure("accuracy"):
            report = accuracy(read_sample(path))
            logger.info(f"overall accuracy {report.overall:.3f} over {report.total} points")
            performance_monitor.count("accuracy", report.total)
            return write_accuracy_csv(self.layout.accuracy, report)

    def report(self, tract_id: str | None = None) -> list[Path]:
        """Per-tract SVG charts and, when impact exists, the island chart"""
        self.layout.require("report", self.layout.zonal, self.layout.models)
        cfg = self.config
        written = []
        with performance_monitor.measure("report"):
            series = build_series(read_zonal_csv(self.layout.zonal))
            models = read_models(self.layout.models, cfg.training_window())
            if tract_id is not None:
                if tract_id not in models:
                    msg = f"no fitted model for tract {tract_id!r}"
                    raise DataError(msg)
                wanted = [tract_id]
            else:
                wanted = sorted(models)
            months = month_range(cfg.training_start, cfg.forecast_end)
            for tid in wanted:
                written.append(tract_chart(self.layout.tract_report(tid), series[tid], models[tid], months))
            if tract_id is None and self.layout.impact.exists():
                written.append(impact_chart(self.layout.impact_report, read_impact_csv(self.layout.impact)))
            performance_monitor.count("report", len(written))
        return written

    def run(self, stages: Sequence[str] = STAGES) -> None:
        """Run stages in dependency order"""
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            msg = f"unknown stage(s): {', '.join(unknown)}"
            raise ValueError(msg)
        self.layout.ensure()
        for stage in STAGES:
            if stage in stages:
                logger.info(f"stage {stage}")
                getattr(self, stage)()
