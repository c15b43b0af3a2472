"""The four natively implemented classifiers and their model files."""

from .dbn import (DbnConfig, DbnModel, RbmLayer, finetune_dbn, predict_dbn, pretrain_dbn,
                  train_dbn)
from .forest import ForestModel, predict_forest, train_random_forest
from .logreg import LinearModel, predict_linear, train_l1_logreg
from .persistence import load_model, save_model
from .svm import KernelModel, predict_svm, rbf_kernel, train_svm_rbf

__all__ = [
    "DbnConfig", "DbnModel", "RbmLayer", "finetune_dbn", "predict_dbn", "pretrain_dbn",
    "train_dbn", "ForestModel", "predict_forest", "train_random_forest", "LinearModel",
    "predict_linear", "train_l1_logreg", "load_model", "save_model", "KernelModel",
    "predict_svm", "rbf_kernel", "train_svm_rbf",
]
