"""SigMF recording pairs and the dataset index built from them."""

from . import _cli, api, feat, sql
