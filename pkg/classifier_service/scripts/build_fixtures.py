#!/usr/bin/env python3
"""Regenerate the packaged training and held-out example files.

Each relation label has one sentence pattern with its own cue phrasing, and
thirteen instantiations from entity filler pools: the first ten go into
fixtures/train_150.jsonl, the last three into fixtures/heldout_45.jsonl.
Held-out sentences therefore reuse every pattern but none of the fillers.
Output is fully determined by the pools and index arithmetic below.
"""

from pathlib import Path

from clsvc.examples import ClassifierExample, dump_examples

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ORGS = [
    "国家林业局", "省林业厅", "市自然资源局", "县林业站", "森林公安局",
    "林业科学研究院", "自然保护区管理局", "生态环境部", "水利部", "农业农村部",
    "草原监理中心", "林场管理处", "园林绿化局",
]
ADMINS = [
    "各级林业主管部门", "县级以上人民政府", "乡镇林业工作站", "森林防火指挥部",
    "自然保护地管理机构", "省级林业主管部门", "基层执法大队", "国有林场",
    "湿地保护管理站", "野生动物救护中心", "区绿化委员会", "流域管理机构",
    "市园林部门",
]
DOCS = [
    "《退耕还林条例》", "《森林法》", "《湿地保护管理规定》", "《防沙治沙法》",
    "《草原法》", "《野生动物保护法》", "《森林防火条例》", "《自然保护区条例》",
    "《种子法》", "《环境保护法》", "《水土保持法》", "《林木采伐管理办法》",
    "《古树名木保护办法》",
]
LOCS = [
    "云南省", "黑龙江省", "大兴安岭", "秦岭山区", "长白山", "内蒙古自治区",
    "武夷山", "祁连山", "三江源", "海南省", "神农架", "塔里木盆地", "呼伦贝尔",
]
PERS = [
    "张伟", "李芳", "王建国", "刘洋", "陈静", "杨帆", "赵磊", "孙丽", "周涛",
    "吴敏", "郑强", "冯雪", "韩冰",
]
ACTS = [
    "砍伐天然林", "开垦林地", "放牧", "采挖野生药材", "猎捕候鸟", "烧荒",
    "占用湿地", "采石取土", "排放污水", "倾倒垃圾", "挖沙", "采摘珍稀植物",
    "毁林开荒",
]
SUBJECTS = [
    "任何单位", "任何个人", "施工单位", "旅游经营者", "采矿企业", "养殖户",
    "游客", "承包经营者", "外来人员", "运输企业", "勘探队伍", "牧民", "摊贩",
]
CONCS = [
    "公益林", "防护林", "天然林", "商品林", "生态红线", "湿地", "草原",
    "水源涵养林", "特种用途林", "经济林", "薪炭林", "疏林地", "灌木林地",
]
DEFS = [
    "以发挥生态效益为主要目的的森林", "国家划定的重点保育区域",
    "以生产木材为主要目的的林分", "常年积水或季节性积水的自然区域",
    "乔木郁闭度较低的林地", "以收获果品或油料为主的林种",
    "为防御自然灾害而营造的林带", "依法划定并严格管控的空间边界",
    "以提供燃料木材为目的的林木", "天然起源且未经改造的森林群落",
    "以灌木为主体的植被类型", "承担科研或国防等特殊功能的森林",
    "河流源头的水源补给地带",
]
CLSS = [
    "行政法规", "部门规章", "地方性法规", "规范性文件", "国家标准", "技术规程",
    "政策文件", "管理办法", "实施细则", "通知公告", "单行条例", "部令",
    "指导意见",
]
DUTY_ITEMS = [
    "森林资源保护", "防火巡查", "林地用途管制", "病虫害防治", "植被恢复",
    "候鸟栖息地管理", "采伐限额执行", "湿地生态补水", "防沙治沙工作",
    "林权登记服务", "古树名木养护", "种苗质量监督", "生态修复验收",
]

#: (label, pool of (s, h)) in a fixed order; offsets keep co-occurring
#: fillers from pairing up the same way twice across labels.
PATTERNS = [
    ("publish", lambda i: (f"{ORGS[i]}制定并颁布了{DOCS[i]}。", ORGS[i])),
    ("locate", lambda i: (f"{ORGS[i]}位于{LOCS[i]}境内。", ORGS[i])),
    ("belongTo", lambda i: (f"{ORGS[i]}隶属于{ORGS[(i + 5) % 13]}。", ORGS[i])),
    ("workFor", lambda i: (f"{PERS[i]}在{ORGS[(i + 2) % 13]}担任处长。", PERS[i])),
    ("duty", lambda i: (f"{ADMINS[i]}应当加强{DUTY_ITEMS[i]}。", ADMINS[i])),
    ("isProhibited", lambda i: (f"{SUBJECTS[i]}严禁{ACTS[i]}。", SUBJECTS[i])),
    ("hasRight", lambda i: (f"{PERS[i]}有权制止{ACTS[(i + 6) % 13]}。", PERS[i])),
    ("define", lambda i: (f"{CONCS[i]}是指{DEFS[i]}。", CONCS[i])),
    ("relevant", lambda i: (f"{CONCS[i]}与{CONCS[(i + 4) % 13]}密切相关。", CONCS[i])),
    ("classifyTo", lambda i: (f"{DOCS[i]}归入{CLSS[i]}类别。", DOCS[i])),
    ("cite", lambda i: (f"{DOCS[i]}引用了{DOCS[(i + 3) % 13]}的有关条款。", DOCS[i])),
    ("contain", lambda i: (f"{LOCS[i]}包括{CONCS[(i + 7) % 13]}等区域。", LOCS[i])),
    ("isPublished", lambda i: (f"{DOCS[i]}由{ORGS[(i + 4) % 13]}印发施行。", DOCS[i])),
    ("employ", lambda i: (f"{ORGS[i]}聘请{PERS[(i + 3) % 13]}为技术顾问。", ORGS[i])),
    ("isCited", lambda i: (f"{DOCS[i]}被{DOCS[(i + 6) % 13]}所援引。", DOCS[i])),
]

TRAIN_PER_LABEL = 10
HELDOUT_PER_LABEL = 3


def build() -> tuple[list[ClassifierExample], list[ClassifierExample]]:
    train, heldout = [], []
    for label, make in PATTERNS:
        for i in range(TRAIN_PER_LABEL + HELDOUT_PER_LABEL):
            s, h = make(i)
            bucket = train if i < TRAIN_PER_LABEL else heldout
            bucket.append(ClassifierExample(s, h, label))
    return train, heldout


def main():
    train, heldout = build()
    FIXTURES.mkdir(exist_ok=True)
    dump_examples(train, FIXTURES / "train_150.jsonl")
    dump_examples(heldout, FIXTURES / "heldout_45.jsonl")
    print(f"wrote {len(train)} training and {len(heldout)} held-out examples")


if __name__ == "__main__":
    main()
